use std::fs;
use std::path::Path;

use contact_homology::formats::{parse_class, parse_family_with, parse_jumps, parse_sampled};
use contact_homology::Error;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn class_seeds_parse() {
    for (name, text) in seeds("parse_class") {
        parse_class(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn table_seeds_parse() {
    for (name, text) in seeds("parse_sampled") {
        parse_sampled(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn jump_seeds_parse() {
    for (name, text) in seeds("parse_jumps") {
        parse_jumps(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn family_seeds_parse() {
    for (name, text) in seeds("parse_family") {
        let (desc, table) = text.split_once('\n').unwrap_or((&text, ""));
        parse_family_with(desc, |_| Ok::<_, Error>(table.to_string())).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
