use std::collections::BTreeSet;
use std::io::Write;

use dehum::lexicons::{
    load_affect_lexicon, load_agency_lexicon, load_perspective_lexicon, load_stem_dictionary, load_vad, Agency,
    AffectLexicon, Dimension, StemDictionary,
};
use dehum::Error;
use proptest::prelude::*;

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn vad_two_rows() {
    let f = file("good\t0.9\t0.5\t0.6\nbad\t0.1\t0.5\t0.4\n");
    let v = load_affect_lexicon(f.path(), Dimension::Valence).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(v.get("good"), Some(0.9));
    assert_eq!(v.get("bad"), Some(0.1));
    let d = load_affect_lexicon(f.path(), Dimension::Dominance).unwrap();
    assert_eq!(d.get("good"), Some(0.6));
    let (v2, d2) = load_vad(f.path()).unwrap();
    assert_eq!((v2, d2), (v, d));
}

#[test]
fn vad_header_case_and_errors() {
    let f = file("Word\tValence\tArousal\tDominance\nGood\t0.9\t0.5\t0.6\n");
    let v = load_affect_lexicon(f.path(), Dimension::Valence).unwrap();
    assert_eq!(v.get("good"), Some(0.9));
    assert_eq!(v.get("GOOD"), Some(0.9));

    let bad_row = file("good\t0.9\t0.5\t0.6\nbad\t0.1\n");
    let err = load_affect_lexicon(bad_row.path(), Dimension::Valence).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");

    let range = file("good\t1.2\t0.5\t0.6\n");
    assert!(load_affect_lexicon(range.path(), Dimension::Valence).is_err());

    let dup = file("good\t0.9\t0.5\t0.6\ngood\t0.8\t0.5\t0.6\n");
    assert!(matches!(
        load_affect_lexicon(dup.path(), Dimension::Valence),
        Err(Error::InFile { .. } | Error::Duplicate { .. })
    ));
}

#[test]
fn loading_twice_is_idempotent() {
    let f = file("a\t0.1\t0.2\t0.3\nb\t0.4\t0.5\t0.6\nc\t0.7\t0.8\t0.9\n");
    let a = load_affect_lexicon(f.path(), Dimension::Valence).unwrap();
    let b = load_affect_lexicon(f.path(), Dimension::Valence).unwrap();
    assert_eq!(a, b);
}

#[test]
fn strip_examples() {
    let l = AffectLexicon::from_entries(Dimension::Valence, [("a", 0.2), ("b", 0.8)]).unwrap();
    let s = l.strip_words(["a"]);
    assert_eq!(s.sorted_entries(), vec![("b", 0.8)]);
    assert_eq!(l.strip_words(std::iter::empty::<&str>()), l);
    assert_eq!(l.strip_words(["zzz"]), l);
}

#[test]
fn perspective_examples() {
    let f = file("praise\t0.5\t0.7\nattack\t-0.6\t0.23\n");
    let p = load_perspective_lexicon(f.path()).unwrap();
    assert_eq!(p.len(), 2);
    let attack = p.get("attack").unwrap();
    assert_eq!((attack.subject, attack.object), (-0.6, 0.23));
    let praise = p.get("praise").unwrap();
    assert_eq!((praise.subject, praise.object), (0.5, 0.7));

    assert!(load_perspective_lexicon(file("praise\t0.95\t0.7\n").path()).is_err());
    assert!(load_perspective_lexicon(file("praise\t0.5\t-0.9\n").path()).is_err());
    assert!(load_perspective_lexicon(file("praise\t0.5\t0.7\npraise\t0.1\t0.1\n").path()).is_err());
}

#[test]
fn agency_examples() {
    let f = file("attack\tagency_pos\ndoubt\tagency_neg\nseem\tagency_equal\n");
    let a = load_agency_lexicon(f.path()).unwrap();
    assert_eq!(a.get("attack"), Some(Agency::Positive));
    assert_eq!(a.get("doubt"), Some(Agency::NonPositive));
    assert_eq!(a.get("seem"), Some(Agency::NonPositive));
    assert_eq!(a.get("zorch"), None);
    assert!(load_agency_lexicon(file("attack\tagency_maybe\n").path()).is_err());
}

#[test]
fn stem_examples() {
    let set = |d: &StemDictionary, v: &[&str]| -> Vec<String> { d.expand(v.iter().copied()).into_iter().collect() };
    let d = StemDictionary::new("moral_disgust", ["disgust*"]);
    assert_eq!(set(&d, &["disgusting", "disgusted", "dish"]), ["disgusted", "disgusting"]);
    let d = StemDictionary::new("moral_disgust", ["sin"]);
    assert_eq!(set(&d, &["sin", "sinister"]), ["sin"]);
    let d = StemDictionary::new("moral_disgust", ["obscen*", "pervert"]);
    assert_eq!(set(&d, &["obscene", "obscenity", "perverts"]), ["obscene", "obscenity"]);
}

#[test]
fn stem_file() {
    let f = file("# comment\nDisgust*\nsin\n\n");
    let d = load_stem_dictionary(f.path(), "moral_disgust").unwrap();
    assert_eq!(d.category, "moral_disgust");
    assert_eq!(d.entries.len(), 2);
    assert!(d.entries[0].is_prefix && d.entries[0].pattern == "disgust");
    assert!(!d.entries[1].is_prefix);
}

fn word() -> impl Strategy<Value = String> {
    "[a-e]{1,6}"
}

proptest! {
    #[test]
    fn strip_removes_exactly_the_set(
        entries in prop::collection::btree_map(word(), 0.0f64..=1.0, 0..30),
        strip in prop::collection::btree_set(word(), 0..10),
    ) {
        let lex = AffectLexicon::from_entries(Dimension::Valence, entries.iter().map(|(w, s)| (w.as_str(), *s))).unwrap();
        let out = lex.strip_words(&strip);
        for (w, s) in &entries {
            if strip.contains(w) {
                prop_assert_eq!(out.get(w), None);
            } else {
                prop_assert_eq!(out.get(w), Some(*s));
            }
        }
        prop_assert_eq!(out.len(), entries.keys().filter(|w| !strip.contains(*w)).count());
    }

    #[test]
    fn expand_matches_double_loop(
        patterns in prop::collection::vec("[a-c]{1,3}\\*?", 0..8),
        words in prop::collection::btree_set("[a-d]{1,5}", 0..400),
    ) {
        let dict = StemDictionary::new("c", &patterns);
        let got = dict.expand(words.iter().map(String::as_str));
        let mut want = BTreeSet::new();
        for w in &words {
            for p in &patterns {
                let hit = match p.strip_suffix('*') {
                    Some(stem) => w.starts_with(stem),
                    None => w == p,
                };
                if hit {
                    want.insert(w.clone());
                }
            }
        }
        prop_assert!(got.iter().all(|w| words.contains(w)));
        prop_assert_eq!(got, want);
    }
}

#[test]
fn expand_matches_double_loop_on_large_vocabulary() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let letters = b"abcdefgh";
    let mut word = |len: usize| -> String { (0..len).map(|_| letters[rng.random_range(0..8)] as char).collect() };
    let words: BTreeSet<String> = (0..10_000).map(|i| word(2 + i % 7)).collect();
    let patterns: Vec<String> = (0..40).map(|i| if i % 2 == 0 { format!("{}*", word(2)) } else { word(3) }).collect();
    let dict = StemDictionary::new("c", &patterns);
    let got = dict.expand(words.iter().map(String::as_str));
    let mut want = BTreeSet::new();
    for w in &words {
        for p in &patterns {
            if p.strip_suffix('*').map_or(w == p, |s| w.starts_with(s)) {
                want.insert(w.clone());
            }
        }
    }
    assert_eq!(got, want);
}
