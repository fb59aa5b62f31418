use std::collections::HashSet;
use std::sync::Arc;

use chromatwin::recipe::Recipe;
use chromatwin::store::{ExperimentRecord, NewRecord, RecordFilter, Source, Store, StoreError, CSV_HEADER, LOG_FILE};
use chromatwin::ColorRgb;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(rng: &mut impl Rng, who: &str) -> NewRecord {
    let r = Recipe::new(rng.random_range(0..=20), rng.random_range(0..=20), rng.random_range(0..=20), rng.random_range(0..=20));
    let c = ColorRgb::new(rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0));
    NewRecord::new(r, c, who, Source::DirectRgb)
}

#[test]
fn concurrent_clients_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let handles: Vec<_> = (0..8)
        .map(|client| {
            let store = store.clone();
            std::thread::spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(client);
                (0..125)
                    .map(|i| {
                        let rec = record(&mut rng, &format!("client {client}")).campaign(format!("{i}"));
                        store.submit(rec).unwrap()
                    })
                    .collect::<Vec<u64>>()
            })
        })
        .collect();
    let mut ids: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    ids.sort_unstable();
    assert_eq!(ids, (1..=1000).collect::<Vec<_>>());
    let before = store.snapshot();
    drop(store);

    let reopened = Store::open(dir.path()).unwrap();
    let all = reopened.query(&RecordFilter::all());
    assert_eq!(all.len(), 1000);
    assert_eq!(all.iter().map(|r| r.id).collect::<Vec<_>>(), (1..=1000).collect::<Vec<_>>());
    assert_eq!(all, *before);
    // Each client's records keep their submission order.
    for client in 0..8 {
        let mine = reopened.query(&RecordFilter::contributor(format!("client {client}")));
        let tags: Vec<String> = mine.iter().map(|r| r.campaign_tag.clone().unwrap()).collect();
        assert_eq!(tags, (0..125).map(|i| i.to_string()).collect::<Vec<_>>());
    }
    assert_eq!(reopened.submit(record(&mut ChaCha8Rng::seed_from_u64(99), "late")).unwrap(), 1001);
}

#[test]
fn readers_see_consistent_prefixes_during_writes() {
    let store = Store::in_memory();
    let writer = {
        let store = store.clone();
        std::thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..300 {
                store.submit(record(&mut rng, "w")).unwrap();
            }
        })
    };
    let mut last = 0;
    while last < 300 {
        let snap: Arc<Vec<ExperimentRecord>> = store.snapshot();
        assert!(snap.len() >= last);
        assert!(snap.iter().enumerate().all(|(i, r)| r.id == i as u64 + 1));
        last = snap.len();
    }
    writer.join().unwrap();
}

fn fixture_csv(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let people = ["ana", "ben", "chidi, jr.", "dana \"dee\""];
    let places = ["", "Purdue", "Lab \"B\"", "multi\nline"];
    let sources = ["image", "direct-rgb", "simulated"];
    let mut out = format!("{CSV_HEADER}\n");
    for i in 0..n {
        let q = |s: &str| if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
        let tag = if rng.random_bool(0.5) { "solo".to_string() } else { String::new() };
        out += &format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            i + 1,
            rng.random_range(0..=20),
            rng.random_range(0..=20),
            rng.random_range(0..=20),
            rng.random_range(0..=20),
            rng.random_range(0..=255),
            rng.random_range(0.0..255.0f64),
            rng.random_range(0..=255),
            q(people[rng.random_range(0..4)]),
            q(places[rng.random_range(0..4)]),
            1_700_000_000 + rng.random_range(0..1000u64),
            sources[rng.random_range(0..3)],
            tag
        );
    }
    out
}

#[test]
fn query_matches_brute_force_filtering() {
    let store = Store::in_memory();
    store.import_csv(&fixture_csv(300, 4)).unwrap();
    let all = store.snapshot();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let pick = |rng: &mut ChaCha8Rng, vals: &[&str]| -> Option<String> {
            rng.random_bool(0.5).then(|| vals[rng.random_range(0..vals.len())].to_string())
        };
        let f = RecordFilter {
            contributor: pick(&mut rng, &["ana", "ben", "chidi, jr.", "nobody"]),
            institution: pick(&mut rng, &["", "Purdue", "multi\nline"]),
            campaign_tag: pick(&mut rng, &["solo", "collab"]),
            since: rng.random_bool(0.5).then(|| 1_700_000_000 + rng.random_range(0..1000)),
            until: rng.random_bool(0.5).then(|| 1_700_000_000 + rng.random_range(0..1000)),
            source: rng.random_bool(0.3).then(|| [Source::Image, Source::DirectRgb, Source::Simulated][rng.random_range(0..3)]),
        };
        let expected: Vec<_> = all
            .iter()
            .filter(|r| {
                f.contributor.as_ref().map_or(true, |c| &r.contributor == c)
                    && f.institution.as_ref().map_or(true, |c| &r.institution == c)
                    && f.campaign_tag.as_ref().map_or(true, |c| r.campaign_tag.as_deref() == Some(c.as_str()))
                    && f.since.map_or(true, |s| r.timestamp >= s)
                    && f.until.map_or(true, |u| r.timestamp <= u)
                    && f.source.map_or(true, |s| r.source == s)
            })
            .cloned()
            .collect();
        assert_eq!(store.query(&f), expected);
    }
}

#[test]
fn export_import_round_trip_is_byte_identical() {
    let text = fixture_csv(120, 6);
    let a = Store::in_memory();
    a.import_csv(&text).unwrap();
    let first = a.export_csv(&RecordFilter::all());
    assert_eq!(first, text);

    let dir = tempfile::tempdir().unwrap();
    let b = Store::open(dir.path()).unwrap();
    assert_eq!(b.import_csv(&first).unwrap(), 120);
    drop(b);
    let b = Store::open(dir.path()).unwrap();
    assert_eq!(b.export_csv(&RecordFilter::all()), first);
}

#[test]
fn import_is_all_or_nothing() {
    let store = Store::in_memory();
    let mut text = fixture_csv(5, 7);
    text += "6,1,2,3,4,10,10,10,eve,,1700000000,image,\n";
    text += "7,99,0,0,0,10,10,10,eve,,1700000000,image,\n";
    match store.import_csv(&text) {
        Err(StoreError::Csv { line, message }) => {
            // Line numbers count physical lines, including quoted newlines.
            assert_eq!(line as usize, text.lines().count());
            assert!(message.contains("red"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(store.is_empty());
    let bad = format!("{CSV_HEADER}\n1,1,1,1,1,1,1,1,x,,1,image,\n2,1,1\n");
    match store.import_csv(&bad) {
        Err(StoreError::Csv { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert!(store.is_empty());
}

#[test]
fn torn_write_recovered_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        store.submit(record(&mut rng, "x")).unwrap();
    }
    drop(store);
    let path = dir.path().join(LOG_FILE);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(&[200, 0, 0, 0, b'{', b'"']);
    std::fs::write(&path, &bytes).unwrap();
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.len(), 10);
    assert_eq!(store.submit(record(&mut rng, "x")).unwrap(), 11);
    drop(store);
    assert_eq!(Store::open(dir.path()).unwrap().len(), 11);
}

#[test]
fn repeats_are_kept_and_findable() {
    let store = Store::in_memory();
    let r = Recipe::new(4, 5, 6, 7);
    let c = ColorRgb::new(1.0, 2.0, 3.0);
    let a = store.submit(NewRecord::new(r, c, "ana", Source::DirectRgb)).unwrap();
    let b = store.submit(NewRecord::new(r, c, "ana", Source::DirectRgb)).unwrap();
    assert_ne!(a, b);
    let found: HashSet<u64> = store.find_by_recipe(&r).iter().map(|x| x.id).collect();
    assert_eq!(found, HashSet::from([a, b]));
}
