#![allow(dead_code)]

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seem_core::eval::{Category, QaItem};
use seem_core::Passage;

pub const FAIL_MARKER: &str = "#fail";

fn stamp(day: NaiveDate, hour: u32) -> String {
    let (h, ampm) = if hour >= 12 { (if hour == 12 { 12 } else { hour - 12 }, "pm") } else { (hour, "am") };
    format!("{h}:15 {ampm} on {} {}, {}", day.format("%-d"), day.format("%B"), day.format("%Y"))
}

const PEOPLE: &[&str] = &["Caroline", "Melanie", "Jon", "Gina", "Tim", "John", "Audrey", "Andrew"];
const PLACES: &[&str] = &["Lisbon", "Central Park", "Maple Library", "Harbor Cafe", "Pine Ridge"];
const THINGS: &[&str] = &[
    "painting class", "charity run", "pottery workshop", "job interview", "camping trip", "book club",
    "violin lesson", "garden project",
];

/// A seeded multi-session dialogue of `n` turns. Every `fail_every`-th
/// turn carries the mock failure marker (0 disables).
pub fn synthetic_corpus(n: usize, seed: u64, fail_every: usize) -> Vec<Passage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2023, 1, 2).unwrap();
    let mut out = Vec::with_capacity(n);
    let mut session = 0;
    let mut turn = 0;
    let mut day = start;
    let mut pair = ("Caroline", "Melanie");
    for i in 0..n {
        if i == 0 || rng.gen_bool(0.12) {
            session += 1;
            turn = 0;
            day += Duration::days(rng.gen_range(1..20));
            let mut ps = PEOPLE.to_vec();
            ps.shuffle(&mut rng);
            pair = (ps[0], ps[1]);
        }
        let (speaker, other) = if turn % 2 == 0 { pair } else { (pair.1, pair.0) };
        let place = PLACES.choose(&mut rng).unwrap();
        let thing = THINGS.choose(&mut rng).unwrap();
        let past = day - Duration::days(rng.gen_range(1..400));
        let text = match rng.gen_range(0..7) {
            0 => format!("{other}, how was the {thing}?"),
            1 => format!("I went to the {thing} at {place} on {}.", past.format("%-d %B %Y")),
            2 => format!("I have been into the {thing} since {}.", past.format("%B %Y")),
            3 => format!("{other}, did you enjoy the {thing} yesterday?"),
            4 => format!("Oh, I met {other} at {place} last week. We talked about the {thing}."),
            5 => format!("My {thing} at {place} went really well because I practiced."),
            _ => format!("{other} joined the {thing} with me."),
        };
        let text = if fail_every > 0 && i % fail_every == fail_every - 1 {
            format!("{text} {FAIL_MARKER}")
        } else {
            text
        };
        out.push(
            Passage::new(format!("session_{session}"), turn, speaker, Some(&stamp(day, 9 + (turn % 10))), text).unwrap(),
        );
        turn += 1;
    }
    out
}

const OWNERS: &[&str] = &[
    "Nate", "Maya", "Omar", "Priya", "Lena", "Tariq", "Ines", "Jonas", "Keiko", "Rafael", "Sofia", "Dmitri",
    "Amara", "Felix", "Hana", "Mateo", "Zara", "Elias", "Noor", "Bruno", "Clara", "Idris", "Yuki", "Marco",
    "Aisha", "Viktor", "Leila", "Tomas", "Greta", "Kofi",
];
const ASKERS: &[&str] = &[
    "Joanna", "Caleb", "Rosa", "Ivan", "Mei", "Dante", "Freya", "Hugo", "Iris", "Jasper", "Kira", "Liam",
    "Mira", "Nico", "Opal", "Pavel", "Quinn", "Ravi", "Selma", "Theo", "Uma", "Wren", "Xavier", "Yara",
    "Zane", "Anya", "Boris", "Cora", "Dev", "Elsa",
];
const ITEMS: &[&str] = &[
    "turtles", "kittens", "bicycle", "telescope", "guitar", "canoe", "piano", "camera", "violin", "aquarium",
    "kayak", "drone", "easel", "typewriter", "microscope", "saddle", "tent", "hammock", "trumpet",
    "skateboard", "lantern", "compass", "banjo", "puppy", "parrot", "loom", "kiln", "harp", "sled", "rowboat",
];
const SHOPS: &[&str] = &[
    "Riverside Animal Shelter", "Harbor Street Market", "Maple Grove Mall", "Old Town Bazaar",
    "Northgate Pawn Shop", "Willow Creek Fair", "Sunset Boulevard Outlet", "Pinecrest Flea Market",
    "Lakeview Craft Store", "Granite Hill Auction",
];
const HELPERS: &[&str] = &[
    "Lucas Bennett", "Anika Rao", "Samir Haddad", "Elena Petrova", "Owen Gallagher", "Mariko Sato",
    "Diego Alvarez", "Fatima Okafor", "Henrik Lund", "Beatrix Moreau",
];

const KIN: &[&str] = &[
    "brother", "aunt", "cousin", "uncle", "grandma", "neighbor", "sister", "colleague", "roommate", "godfather",
];
const FOUND: &[&str] = &[
    "bought", "found", "picked", "ordered", "spotted", "chose", "grabbed", "purchased", "collected", "snagged",
];
const SENT: &[&str] = &[
    "mailed", "shipped", "posted", "delivered", "dropped off", "sent", "couriered", "brought", "handed over", "passed on",
];
const AFTER: &[&str] = &[
    "It arrived in one piece.", "Such a lovely surprise.", "Perfect timing too.", "It came well packed.",
    "Totally unexpected.", "Best gift ever.", "What a treat.", "Still smiling about it.", "Couldn't believe it.",
    "Very thoughtful.",
];

/// Thirty two-turn exchanges. The first turn asks about an item and is the
/// only one carrying facts; the reply holds the answer but yields no
/// quadruple, so it can be reached only through its episodic frame.
pub fn rpe_suite() -> (Vec<Passage>, Vec<QaItem>) {
    let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
    let mut passages = Vec::new();
    let mut items = Vec::new();
    for i in 0..30 {
        let (owner, asker, item) = (OWNERS[i], ASKERS[i], ITEMS[i]);
        let day = start + Duration::days(9 * i as i64);
        let hour = 8 + (i % 12) as u32;
        let ts = format!(
            "{}:{:02} {} on {} {}, {}",
            if hour > 12 { hour - 12 } else { hour },
            (7 * i) % 60,
            if hour >= 12 { "pm" } else { "am" },
            day.format("%-d"),
            day.format("%B"),
            day.format("%Y")
        );
        let session = format!("session_{}", i + 1);
        let k = i / 3;
        let (question, reply, query, gold, category) = match i % 3 {
            0 => {
                let shop = SHOPS[k];
                (
                    format!("{owner}, where did you buy the {item}?"),
                    format!("My {} {} the {item} at the {shop}.", KIN[k], FOUND[k]),
                    format!("Where did {owner} buy the {item}?"),
                    shop.to_string(),
                    Category::SingleHop,
                )
            }
            1 => {
                let sent = day - Duration::days(30 + 11 * i as i64);
                let date = sent.format("%-d %B %Y").to_string();
                (
                    format!("{owner}, when did you receive the {item}?"),
                    format!("My {} {} the {item} on {date}. {}", KIN[9 - k], SENT[k], AFTER[k]),
                    format!("When did {owner} receive the {item}?"),
                    date,
                    Category::Temporal,
                )
            }
            _ => {
                let helper = HELPERS[k];
                (
                    format!("{owner}, did you repair the {item} with someone?"),
                    format!("My {} {helper} helped me fix the {item}.", KIN[(k + 5) % 10]),
                    format!("Who helped {owner} repair the {item}?"),
                    helper.to_string(),
                    Category::MultiHop,
                )
            }
        };
        passages.push(Passage::new(&session, 0, asker, Some(&ts), question).unwrap());
        passages.push(Passage::new(&session, 1, owner, Some(&ts), reply).unwrap());
        items.push(QaItem {
            question_id: format!("rpe-{i:02}"),
            category,
            subcategory: None,
            query,
            gold: Some(gold),
        });
    }
    (passages, items)
}

/// Ten turns whose layer statistics are counted by hand in the tests.
pub fn stats_corpus() -> Vec<Passage> {
    let ts1 = "1:56 pm on 8 May, 2023";
    let ts2 = "10:00 am on 20 May, 2023";
    let rows: [(&str, u32, &str, &str, &str); 10] = [
        ("session_1", 0, "Caroline", ts1, "I went to the support group on 7 May 2023."),
        ("session_1", 1, "Melanie", ts1, "Caroline, did you like the support group?"),
        ("session_1", 2, "Caroline", ts1, "It was powerful."),
        ("session_1", 3, "Melanie", ts1, "I painted a sunrise."),
        ("session_1", 4, "Caroline", ts1, "Melanie, when did you start painting?"),
        ("session_1", 5, "Melanie", ts1, "I have painted since 2019."),
        ("session_2", 0, "Jon", ts2, "I opened a dance studio."),
        ("session_2", 1, "Gina", ts2, "That is wonderful news."),
        ("session_2", 2, "Jon", ts2, "I hired Rob."),
        ("session_2", 3, "Gina", ts2, "Robert is a great teacher."),
    ];
    rows.iter()
        .map(|(s, t, sp, ts, text)| Passage::new(*s, *t, *sp, Some(ts), *text).unwrap())
        .collect()
}
