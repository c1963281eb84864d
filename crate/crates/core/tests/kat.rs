//! Replays the committed known-answer records.
//!
//! Set `MCNIE_REGENERATE_KAT=1` to rewrite `tests/data/kat.txt`.

use mcnie::codec::{kat_generate, kat_verify, KatRecord};
use mcnie::params::NamedSet;

const PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/kat.txt");
const PER_SET: u8 = 2;

fn regenerate() {
    let mut text = String::from("# McNie known-answer records: param, seed, pk, sk, msg, ct, recovered\n\n");
    for set in NamedSet::all() {
        for i in 0..PER_SET {
            let mut seed = [0u8; 32];
            seed[0] = set.id;
            seed[31] = i;
            text.push_str(&kat_generate(set.name, seed).unwrap().to_text());
            text.push('\n');
        }
    }
    std::fs::write(PATH, text).unwrap();
}

#[test]
fn committed_records_replay() {
    if std::env::var_os("MCNIE_REGENERATE_KAT").is_some() {
        regenerate();
    }
    let text = std::fs::read_to_string(PATH).unwrap();
    let records = KatRecord::parse_all(&text).unwrap();
    assert_eq!(records.len(), NamedSet::all().len() * PER_SET as usize);
    for r in &records {
        kat_verify(r).unwrap_or_else(|e| panic!("{} seed {}: {e}", r.param, hex::encode(r.seed)));
        assert_eq!(&KatRecord::parse(&r.to_text()).unwrap(), r);
    }
}

#[test]
fn tampered_record_names_field() {
    let text = std::fs::read_to_string(PATH).unwrap();
    let mut r = KatRecord::parse_all(&text).unwrap().remove(0);
    let last = r.ct.len() - 1;
    r.ct[last] ^= 1;
    let err = kat_verify(&r).unwrap_err().to_string();
    assert!(err.contains("`ct`"), "{err}");
}
