mod common;

use std::sync::Arc;

use chromatwin::store::{RecordFilter, Source, Store};
use chromatwin::vision::{render_sample, TemplateGeometry};
use chromatwin::{ColorRgb, HyperPolicy, Recipe};
use chromatwin_cli::api::{ErrorBody, IngestMeta, RecordInput, SuggestRequest};
use chromatwin_cli::client::Client;
use chromatwin_cli::service::{spawn_server, ServiceConfig};
use chromatwin_cli::{ops, render, ErrorKind};

fn server(store: Store) -> (Arc<Store>, chromatwin_cli::service::ServerHandle) {
    let store = Arc::new(store);
    let h = spawn_server(store.clone(), ServiceConfig::default(), "127.0.0.1:0").unwrap();
    (store, h)
}

fn raw_agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn input(recipe: [u32; 4], rgb: [f64; 3], who: &str) -> RecordInput {
    RecordInput {
        recipe: Recipe::from_counts(recipe),
        measured: ColorRgb::from_channels(rgb),
        contributor: who.into(),
        institution: "Purdue".into(),
        source: Source::DirectRgb,
        campaign_tag: None,
        image_digest: None,
    }
}

#[test]
fn post_then_get_round_trip() {
    let (store, h) = server(Store::in_memory());
    let c = Client::new(h.url());
    let a = c.submit(&input([1, 2, 3, 4], [10.0, 20.5, 30.25], "Scientist 1")).unwrap();
    let b = c.submit(&input([1, 2, 3, 4], [11.0, 20.0, 30.0], "Scientist 2")).unwrap();
    assert_eq!((a.id, a.repeat_of.clone()), (1, vec![]));
    assert_eq!((b.id, b.repeat_of), (2, vec![1]));
    let all = c.query(&RecordFilter::all()).unwrap();
    assert_eq!(all, store.query(&RecordFilter::all()));
    assert_eq!(all[0].measured, ColorRgb::new(10.0, 20.5, 30.25));
    let only = c.query(&RecordFilter::contributor("Scientist 2")).unwrap();
    assert_eq!(only.iter().map(|r| r.id).collect::<Vec<_>>(), [2]);
}

#[test]
fn records_json_uses_csv_field_names() {
    let (_store, h) = server(Store::in_memory());
    let body = r#"{"red":3,"yellow":0,"blue":1,"green":0,"r":100,"g":50,"b":25,"contributor":"x"}"#;
    let mut resp = raw_agent()
        .post(&format!("{}/records", h.url()))
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    assert_eq!(resp.status(), 201);
    let v: serde_json::Value = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(v["id"], 1);
    let mut resp = raw_agent().get(&format!("{}/records", h.url())).call().unwrap();
    let v: serde_json::Value = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    let keys: Vec<&str> = v[0].as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["id", "red", "yellow", "blue", "green", "r", "g", "b", "contributor", "institution", "timestamp", "source"] {
        assert!(keys.contains(&k), "{k} missing from {keys:?}");
    }
    assert_eq!(v[0]["source"], "direct-rgb");
}

#[test]
fn invalid_bodies_are_400_with_fields() {
    let (store, h) = server(Store::in_memory());
    let agent = raw_agent();
    let url = format!("{}/records", h.url());
    let mut resp = agent.post(&url).header("content-type", "application/json").send("{not json").unwrap();
    assert_eq!(resp.status(), 400);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(e.error, "validation");

    let bad = serde_json::to_string(&input([21, 0, 0, 0], [300.0, 0.0, 0.0], " ")).unwrap();
    let mut resp = agent.post(&url).header("content-type", "application/json").send(&bad).unwrap();
    assert_eq!(resp.status(), 400);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    let fields: Vec<String> = e.fields.unwrap().into_iter().map(|f| f.field).collect();
    assert!(fields.contains(&"red".to_string()) && fields.contains(&"contributor".to_string()), "{fields:?}");
    assert!(store.is_empty());

    let mut resp = agent.get(&format!("{}/records?since=yesterday", h.url())).call().unwrap();
    assert_eq!(resp.status(), 400);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(e.error, "validation");
}

#[test]
fn query_string_filters_match_local_filters() {
    let store = Store::in_memory();
    common::fill_fixture(&store);
    let (store, h) = server(store);
    let c = Client::new(h.url());
    let filters = [
        RecordFilter::all(),
        RecordFilter::contributor("Scientist 3"),
        RecordFilter {
            source: Some(Source::DirectRgb),
            ..Default::default()
        },
        RecordFilter {
            institution: Some("Purdue".into()),
            since: Some(0),
            until: Some(u64::MAX),
            ..Default::default()
        },
        RecordFilter {
            campaign_tag: Some("none such".into()),
            ..Default::default()
        },
    ];
    for f in &filters {
        assert_eq!(c.query(f).unwrap(), store.query(f), "{f:?}");
        assert_eq!(c.export_csv(f).unwrap(), store.export_csv(f), "{f:?}");
    }
}

#[test]
fn suggest_matches_local_and_renders_identically() {
    let store = Store::in_memory();
    common::fill_fixture(&store);
    let (store, h) = server(store);
    let c = Client::new(h.url());
    for (target, filter, max_drops) in [
        ([4.0, 90.0, 152.0], RecordFilter::all(), None),
        ([253.0, 90.0, 30.0], RecordFilter::contributor("Scientist 1"), Some(12)),
    ] {
        let req = SuggestRequest {
            target_rgb: target,
            filter,
            max_drops,
            hyper: None,
        };
        let remote = c.suggest(&req).unwrap();
        let local = ops::suggest(&store, &req, &HyperPolicy::default()).unwrap();
        assert_eq!(remote, local);
        for f in [render::Format::Text, render::Format::Json, render::Format::Csv] {
            assert_eq!(render::suggestion(&remote, f), render::suggestion(&local, f));
        }
    }
}

#[test]
fn suggest_on_empty_store_is_400_no_records() {
    let (_store, h) = server(Store::in_memory());
    let mut resp = raw_agent()
        .post(&format!("{}/suggest", h.url()))
        .header("content-type", "application/json")
        .send(r#"{"target_rgb":[10,20,30]}"#)
        .unwrap();
    assert_eq!(resp.status(), 400);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(e.error, "no_records");
    let err = Client::new(h.url())
        .suggest(&SuggestRequest {
            target_rgb: [10.0, 20.0, 30.0],
            filter: RecordFilter::all(),
            max_drops: None,
            hyper: None,
        })
        .unwrap_err();
    assert_eq!(err.kind, ErrorKind::Model);
    assert!(err.message.contains("seed recipes"));

    let mut resp = raw_agent()
        .post(&format!("{}/suggest", h.url()))
        .header("content-type", "application/json")
        .send(r#"{"target_rgb":[10,20,300]}"#)
        .unwrap();
    assert_eq!(resp.status(), 400);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!(e.error, "validation");
}

#[test]
fn ingest_measures_photo_and_flags_repeats() {
    let (store, h) = server(Store::in_memory());
    let c = Client::new(h.url());
    let g = TemplateGeometry::default();
    let png = render_sample(&g, [4, 90, 152]).unwrap().to_png().unwrap();
    let meta = IngestMeta {
        recipe: Recipe::new(0, 3, 9, 6),
        contributor: "Scientist 4".into(),
        institution: "Purdue".into(),
        campaign_tag: Some("dolphins".into()),
    };
    let first = c.ingest(&png, &meta).unwrap();
    for (got, want) in first.measured_rgb.iter().zip([4.0, 90.0, 152.0]) {
        assert!((got - want).abs() <= 1.0);
    }
    assert_eq!(first.diagnostics.marker_count, 4);
    assert!(first.repeat_of.is_empty());
    let second = c.ingest(&png, &meta).unwrap();
    assert_eq!(second.repeat_of, vec![first.id]);
    let rec = store.get(first.id).unwrap();
    assert_eq!(rec.source, Source::Image);
    assert_eq!(rec.campaign_tag.as_deref(), Some("dolphins"));
    assert!(rec.image_digest.is_some());
}

#[test]
fn ingest_rejects_three_markers_with_422() {
    let (store, h) = server(Store::in_memory());
    let g = TemplateGeometry::default();
    let mut img = render_sample(&g, [4, 90, 152]).unwrap();
    let r = g.marker_rect(2);
    img.fill_rect(r.x0, r.y0, r.x1, r.y1, [255; 3]);
    let png = img.to_png().unwrap();

    let boundary = "XyZ";
    let mut body = Vec::new();
    for (k, v) in [("red", "0"), ("yellow", "3"), ("blue", "9"), ("green", "6"), ("contributor", "a")] {
        body.extend_from_slice(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{k}\"\r\n\r\n{v}\r\n").as_bytes());
    }
    body.extend_from_slice(
        format!("--{boundary}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"p.png\"\r\n\r\n").as_bytes(),
    );
    body.extend_from_slice(&png);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    let mut resp = raw_agent()
        .post(&format!("{}/ingest", h.url()))
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .send(&body[..])
        .unwrap();
    assert_eq!(resp.status(), 422);
    let e: ErrorBody = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    assert_eq!((e.error.as_str(), e.found), ("vision", Some(3)));
    assert!(store.is_empty());
}

#[test]
fn ingest_rejects_bad_recipe_before_vision() {
    let (store, h) = server(Store::in_memory());
    let err = Client::new(h.url())
        .ingest(
            b"not an image",
            &IngestMeta {
                recipe: Recipe::new(25, 0, 0, 0),
                contributor: "a".into(),
                institution: String::new(),
                campaign_tag: None,
            },
        )
        .unwrap_err();
    assert_eq!(err.kind, ErrorKind::Usage);
    assert!(store.is_empty());
}

#[test]
fn export_import_round_trip_over_http() {
    let src = Store::in_memory();
    common::fill_fixture(&src);
    let (_a, ha) = server(src);
    let (_b, hb) = server(Store::in_memory());
    let (ca, cb) = (Client::new(ha.url()), Client::new(hb.url()));
    let csv = ca.export_csv(&RecordFilter::all()).unwrap();
    assert_eq!(cb.import_csv(&csv).unwrap(), 10);
    assert_eq!(cb.export_csv(&RecordFilter::all()).unwrap(), csv);

    let broken = csv.replacen("Scientist 2", "Scientist 2\",\"oops", 1);
    let err = cb.import_csv(&broken).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Usage);
    assert!(err.message.contains("line"), "{}", err.message);
    assert_eq!(cb.query(&RecordFilter::all()).unwrap().len(), 10);
}

#[test]
fn unreachable_service_is_storage_error() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let err = Client::new(format!("http://127.0.0.1:{port}"))
        .query(&RecordFilter::all())
        .unwrap_err();
    assert_eq!(err.kind, ErrorKind::Storage);
}
