//! Deterministic synthetic corpus: four topic clusters in an 8-dim space.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hetmatch::corpus::PairRecord;

pub const TOPICS: [(&str, [&str; 8]); 4] = [
    (
        "ocean",
        [
            "plankton",
            "whale",
            "algae",
            "marine",
            "phytoplankton",
            "oceans",
            "fisheries",
            "Plankton",
        ],
    ),
    (
        "energy",
        [
            "energy",
            "heat",
            "solar",
            "battery",
            "voltage",
            "circuit",
            "electricity",
            "power",
        ],
    ),
    (
        "cells",
        [
            "cells",
            "enzymes",
            "genes",
            "DNA",
            "molecules",
            "tissues",
            "organisms",
            "proteins",
        ],
    ),
    (
        "weather",
        [
            "weather",
            "climate",
            "rain",
            "clouds",
            "temperature",
            "storms",
            "humidity",
            "wind",
        ],
    ),
];

pub const GENERIC: [&str; 6] = [
    "experiment",
    "project",
    "measure",
    "observe",
    "samples",
    "results",
];
pub const FILLER: [&str; 5] = ["the", "of", "and", "you", "can"];

pub const DIM: usize = 8;

pub struct Fixture {
    pub dir: PathBuf,
    pub embeddings: PathBuf,
    pub dataset: PathBuf,
    pub records: Vec<PairRecord>,
}

fn vector(rng: &mut ChaCha8Rng, topic: Option<usize>) -> Vec<f64> {
    (0..DIM)
        .map(|d| {
            let base = match topic {
                Some(t) if d == t => 1.0,
                Some(_) => 0.0,
                None if d >= 4 => 0.6,
                None => 0.0,
            };
            base + rng.random_range(-0.35..0.35)
        })
        .collect()
}

pub fn embeddings_text() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = String::new();
    for (t, (_, words)) in TOPICS.iter().enumerate() {
        for w in words {
            let v = vector(&mut rng, Some(t));
            writeln!(out, "{w} {}", join(&v)).unwrap();
        }
    }
    for w in GENERIC {
        let v = vector(&mut rng, None);
        writeln!(out, "{w} {}", join(&v)).unwrap();
    }
    // exactly orthogonal probes
    let mut north = vec![0.0; DIM];
    north[6] = 1.0;
    let mut south = vec![0.0; DIM];
    south[7] = 1.0;
    writeln!(out, "north {}", join(&north)).unwrap();
    writeln!(out, "south {}", join(&south)).unwrap();
    out
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str], k: usize) -> Vec<&'a str> {
    (0..k)
        .map(|_| words[rng.random_range(0..words.len())])
        .collect()
}

pub fn records() -> Vec<PairRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut concepts = Vec::new();
    for c in 0..8 {
        let t = c % TOPICS.len();
        let (name, words) = TOPICS[t];
        let mut desc = pick(&mut rng, &words, 6);
        desc.extend(pick(&mut rng, &FILLER, 3));
        concepts.push((
            format!("c{c}"),
            t,
            format!("{name}: {} {}", words[c % 8], words[(c + 3) % 8]),
            desc.join(" ") + " .",
        ));
    }
    let mut projects = Vec::new();
    for p in 0..24 {
        let t = (p * 3 + 1) % TOPICS.len();
        let mut words = pick(&mut rng, &TOPICS[t].1, 10);
        words.extend(pick(&mut rng, &GENERIC, 6));
        words.extend(pick(&mut rng, &FILLER, 6));
        words.push("Krabby");
        projects.push((format!("p{p}"), t, words.join(" ")));
    }
    let mut out = Vec::new();
    for (cid, ct, label, desc) in &concepts {
        for (pid, pt, text) in &projects {
            if rng.random_bool(0.45) {
                out.push(PairRecord {
                    concept_id: cid.clone(),
                    concept_label: label.clone(),
                    concept_description: desc.clone(),
                    project_id: pid.clone(),
                    project_text: text.clone(),
                    label: u8::from(ct == pt),
                });
            }
        }
    }
    out
}

pub fn write(dir: &Path) -> Fixture {
    let embeddings = dir.join("vectors.txt");
    std::fs::write(&embeddings, embeddings_text()).unwrap();
    let records = records();
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).unwrap());
        text.push('\n');
    }
    // one exact duplicate row
    text.push_str(&serde_json::to_string(&records[0]).unwrap());
    text.push('\n');
    let dataset = dir.join("pairs.jsonl");
    std::fs::write(&dataset, text).unwrap();
    Fixture {
        dir: dir.to_path_buf(),
        embeddings,
        dataset,
        records,
    }
}
