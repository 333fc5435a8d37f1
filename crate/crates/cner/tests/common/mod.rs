//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;

use axum::Router;
use cner::config::{parse_pairs, ServiceConfig};
use cner::pipeline::Analyzer;
use cner::service::{router, AppState};

pub const FIXTURE_SENTENCE: &str = "Juan vive en Cali.";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures().join(name)
}

/// The fixture config, read without environment overrides.
pub fn fixture_config() -> ServiceConfig {
    config_from_text(&std::fs::read_to_string(fixture("service.conf")).unwrap())
}

pub fn config_from_text(text: &str) -> ServiceConfig {
    ServiceConfig::from_pairs(parse_pairs(text).unwrap(), &fixtures(), |_| None).unwrap()
}

pub fn empty_config() -> ServiceConfig {
    ServiceConfig::from_pairs(BTreeMap::new(), &fixtures(), |_| None).unwrap()
}

/// Serves `router` on an ephemeral port from a background runtime and
/// returns its base URL.
pub fn spawn_router(router: Router) -> String {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

pub fn spawn_service(config: &ServiceConfig) -> String {
    spawn_router(router(AppState::new(Analyzer::from_config(config).unwrap())))
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

fn finish(response: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> (u16, String) {
    let mut response = response.unwrap();
    let status = response.status().as_u16();
    (status, response.body_mut().read_to_string().unwrap())
}

pub fn get(url: &str) -> (u16, String) {
    finish(agent().get(url).call())
}

pub fn post_json(url: &str, body: &str) -> (u16, String) {
    finish(agent().post(url).header("content-type", "application/json").send(body))
}

pub struct Part<'a> {
    pub name: &'a str,
    pub filename: Option<&'a str>,
    pub bytes: &'a [u8],
}

pub fn multipart_body(parts: &[Part]) -> (String, Vec<u8>) {
    let boundary = "cner-test-boundary-7f3a";
    let mut body = Vec::new();
    for part in parts {
        write!(
            body,
            "--{boundary}\r\nContent-Disposition: form-data; name=\"{}\"",
            part.name
        )
        .unwrap();
        if let Some(f) = part.filename {
            write!(body, "; filename=\"{f}\"").unwrap();
        }
        body.extend_from_slice(b"\r\n\r\n");
        body.extend_from_slice(part.bytes);
        body.extend_from_slice(b"\r\n");
    }
    write!(body, "--{boundary}--\r\n").unwrap();
    (format!("multipart/form-data; boundary={boundary}"), body)
}

pub fn post_multipart(url: &str, parts: &[Part]) -> (u16, String) {
    let (content_type, body) = multipart_body(parts);
    finish(agent().post(url).header("content-type", &content_type).send(&body[..]))
}

/// Uploads one file with the given options JSON.
pub fn upload(base: &str, filename: &str, bytes: &[u8], options: &str) -> (u16, String) {
    post_multipart(
        &format!("{base}/analyze"),
        &[
            Part {
                name: "options",
                filename: None,
                bytes: options.as_bytes(),
            },
            Part {
                name: "file",
                filename: Some(filename),
                bytes,
            },
        ],
    )
}

/// `body` with its timing object replaced by zeros, byte for byte otherwise.
pub fn zero_timing(body: &str) -> String {
    let start = body.find("\"timing\":{").expect("timing object present");
    let end = start + body[start..].find('}').expect("timing object closes") + 1;
    format!(
        "{}\"timing\":{{\"segment_ms\":0,\"ner_ms\":0,\"relex_ms\":0}}{}",
        &body[..start],
        &body[end..]
    )
}

pub fn error_code(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A minimal OpenDocument text archive holding one paragraph per entry.
pub fn odt(paragraphs: &[&str]) -> Vec<u8> {
    use zip::write::SimpleFileOptions;
    let mut body = String::new();
    for p in paragraphs {
        body.push_str(&format!(
            "<text:p text:style-name=\"Standard\">{}</text:p>",
            xml_escape(p)
        ));
    }
    let content = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\
         <office:document-content \
         xmlns:office=\"urn:oasis:names:tc:opendocument:xmlns:office:1.0\" \
         xmlns:text=\"urn:oasis:names:tc:opendocument:xmlns:text:1.0\" office:version=\"1.2\">\
         <office:body><office:text>{body}</office:text></office:body></office:document-content>"
    );
    let mut writer = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let stored = SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
    writer.start_file("mimetype", stored).unwrap();
    writer.write_all(b"application/vnd.oasis.opendocument.text").unwrap();
    writer.start_file("content.xml", stored).unwrap();
    writer.write_all(content.as_bytes()).unwrap();
    writer.finish().unwrap().into_inner()
}

use cner::corpus::{NerCorpus, NerSentence, RawMention, RawRecord, RawRelation};
use cner_core::ner::{BioTag, EntityType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gazetteer used to generate synthetic NER corpora. Entries may span
/// several tokens.
pub const GAZETTEER: &[(EntityType, &str)] = &[
    (EntityType::Per, "Juan Pérez"),
    (EntityType::Per, "Ana"),
    (EntityType::Per, "Luis Gómez"),
    (EntityType::Per, "María"),
    (EntityType::Org, "Universidad del Valle"),
    (EntityType::Org, "Ecopetrol"),
    (EntityType::Org, "Banco de Bogotá"),
    (EntityType::Fac, "Aeropuerto El Dorado"),
    (EntityType::Fac, "Estadio Pascual Guerrero"),
    (EntityType::Loc, "Río Cauca"),
    (EntityType::Loc, "Los Andes"),
    (EntityType::Gpe, "Cali"),
    (EntityType::Gpe, "Colombia"),
    (EntityType::Gpe, "Medellín"),
    (EntityType::Veh, "Airbus A320"),
    (EntityType::Veh, "Renault"),
    (EntityType::Wea, "AK-47"),
    (EntityType::Wea, "Glock"),
];

/// Sentence templates; `{X}` slots take a gazetteer entry of type X.
const TEMPLATES: &[&str] = &[
    "{PER} trabaja en {ORG} desde 2010 .",
    "{PER} viajó a {GPE} en un {VEH} .",
    "la policía encontró un {WEA} cerca del {FAC} .",
    "{PER} vive en {GPE} , junto al {LOC} .",
    "{ORG} abrió una sede en {GPE} .",
    "el {VEH} aterrizó en el {FAC} ayer .",
    "{PER} y {PER} visitaron {LOC} .",
    "el alcalde de {GPE} habló con {PER} .",
];

fn entries(ty: EntityType) -> Vec<&'static str> {
    GAZETTEER.iter().filter(|(t, _)| *t == ty).map(|(_, e)| *e).collect()
}

/// `n` sentences filled from [`GAZETTEER`] with gold BIO tags.
pub fn gazetteer_corpus(n: usize, seed: u64) -> NerCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(n);
    for i in 0..n {
        let template = TEMPLATES[rng.random_range(0..TEMPLATES.len())];
        let (mut tokens, mut tags) = (Vec::new(), Vec::new());
        for piece in template.split(' ') {
            let slot = piece.strip_prefix('{').and_then(|p| p.strip_suffix('}'));
            match slot.map(|code| code.parse::<EntityType>().unwrap()) {
                Some(ty) => {
                    let options = entries(ty);
                    let entry = options[rng.random_range(0..options.len())];
                    for (k, word) in entry.split(' ').enumerate() {
                        tokens.push(word.to_string());
                        tags.push(if k == 0 { BioTag::B(ty) } else { BioTag::I(ty) });
                    }
                }
                None => {
                    tokens.push(piece.to_string());
                    tags.push(BioTag::O);
                }
            }
        }
        sentences.push(NerSentence {
            tokens,
            tags,
            line: i + 1,
        });
    }
    NerCorpus { sentences }
}

/// Relation label determined by the argument type pair. The `NON-REL`
/// pair is left unlisted so it becomes an implicit negative.
pub const SEPARABLE_CLASSES: [(&str, EntityType, EntityType); 6] = [
    ("GPE-AFF", EntityType::Per, EntityType::Gpe),
    ("PHYS", EntityType::Per, EntityType::Loc),
    ("DISC", EntityType::Org, EntityType::Gpe),
    ("EMP-ORG", EntityType::Per, EntityType::Org),
    ("ART", EntityType::Per, EntityType::Veh),
    ("NON-REL", EntityType::Fac, EntityType::Wea),
];

fn name_for(ty: EntityType, rng: &mut ChaCha8Rng) -> &'static str {
    let names: &[&str] = match ty {
        EntityType::Per => &["Juan", "Ana", "Luis", "María", "Pedro", "Sofía"],
        EntityType::Org => &["Ecopetrol", "Avianca", "Bancolombia", "Univalle"],
        EntityType::Gpe => &["Cali", "Colombia", "Medellín", "Bogotá"],
        EntityType::Loc => &["Cauca", "Magdalena", "Amazonas"],
        EntityType::Veh => &["Renault", "Airbus", "Chevrolet"],
        EntityType::Fac => &["Dorado", "Palacio", "Estadio"],
        EntityType::Wea => &["Glock", "Beretta", "Remington"],
    };
    names[rng.random_range(0..names.len())]
}

/// `per_class` one-pair records for each of the six labels. Every record
/// has exactly one mention pair, whose type pair identifies its label.
pub fn separable_records(per_class: usize, seed: u64) -> Vec<RawRecord> {
    const FILLERS: [&str; 5] = ["visitó", "está con", "conoce a", "habló de", "y"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for _ in 0..per_class {
        for (label, t1, t2) in SEPARABLE_CLASSES {
            let (a, b) = (name_for(t1, &mut rng), name_for(t2, &mut rng));
            let filler = FILLERS[rng.random_range(0..FILLERS.len())];
            let text = format!("{a} {filler} {b}.");
            let a_len = a.chars().count();
            let b_start = a_len + 1 + filler.chars().count() + 1;
            let mention = |start: usize, end: usize, ty: EntityType| RawMention {
                start,
                end,
                entity_type: ty.code().to_string(),
            };
            let relations = if label == "NON-REL" {
                Vec::new()
            } else {
                vec![RawRelation {
                    arg1: 0,
                    arg2: 1,
                    label: label.to_string(),
                }]
            };
            records.push(RawRecord {
                text,
                mentions: vec![mention(0, a_len, t1), mention(b_start, b_start + b.chars().count(), t2)],
                relations,
            });
        }
    }
    records
}

/// Stub implementing the remote protocol: `/echo` tags every capitalized
/// token as PER, `/bad-type` adds an unknown type, `/slow` never answers in
/// time, `/broken` returns a non-JSON body and `/error` a 500.
pub fn remote_stub() -> String {
    use axum::routing::post;
    use axum::Json;
    use cner::remote::RemoteRequest;
    use serde_json::{json, Value};
    use std::time::Duration;

    async fn echo(Json(request): Json<RemoteRequest>) -> Json<Value> {
        assert_eq!(request.language, "es");
        let mentions: Vec<Value> = request
            .tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.chars().next().is_some_and(char::is_uppercase))
            .map(|(i, _)| json!({"type": "PER", "first": i, "last": i, "confidence": 0.75}))
            .collect();
        Json(json!({ "mentions": mentions }))
    }
    async fn bad_type(Json(_): Json<RemoteRequest>) -> Json<Value> {
        Json(json!({"mentions": [
            {"type": "PER", "first": 0, "last": 0, "confidence": 0.9},
            {"type": "XYZ", "first": 1, "last": 1, "confidence": 0.9}
        ]}))
    }
    async fn slow() -> Json<Value> {
        tokio::time::sleep(Duration::from_secs(5)).await;
        Json(json!({"mentions": []}))
    }
    async fn broken() -> &'static str {
        "<html>"
    }
    async fn error() -> (axum::http::StatusCode, &'static str) {
        (axum::http::StatusCode::INTERNAL_SERVER_ERROR, "{}")
    }
    spawn_router(
        Router::new()
            .route("/echo", post(echo))
            .route("/bad-type", post(bad_type))
            .route("/slow", post(slow))
            .route("/broken", post(broken))
            .route("/error", post(error)),
    )
}
