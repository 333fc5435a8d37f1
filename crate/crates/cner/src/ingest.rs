//! Turns uploaded files into raw text.

use std::io::{Cursor, Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use roxmltree::{Document as XmlDocument, Node};

const TEXT_NS: &str = "urn:oasis:names:tc:opendocument:xmlns:text:1.0";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("{0}")]
    UnsupportedFormat(String),
    #[error("{0}")]
    CorruptFile(String),
    #[error("upload of {size} bytes exceeds the limit of {limit} bytes")]
    PayloadTooLarge { size: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub text: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub max_bytes: usize,
    /// Shell-free command line (program and arguments split on whitespace)
    /// that reads a `.doc` on stdin and writes plain UTF-8 text to stdout.
    pub doc_converter: Option<String>,
}

pub fn ingest_file(filename: &str, bytes: &[u8], options: &IngestOptions) -> Result<Ingested, IngestError> {
    if bytes.len() > options.max_bytes {
        return Err(IngestError::PayloadTooLarge {
            size: bytes.len(),
            limit: options.max_bytes,
        });
    }
    let extension = Path::new(filename)
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match extension.as_str() {
        "txt" => Ok(decode_plain(bytes)),
        "odt" => Ok(Ingested {
            text: odt_text(bytes)?,
            warnings: Vec::new(),
        }),
        "doc" => match &options.doc_converter {
            Some(command) => convert_doc(command, bytes),
            None => Err(IngestError::UnsupportedFormat(
                ".doc files need a converter; set `doc_converter` in the configuration or upload .txt or .odt".into(),
            )),
        },
        _ => Err(IngestError::UnsupportedFormat(format!(
            "unsupported file type `{filename}`; accepted extensions are .txt, .odt and .doc"
        ))),
    }
}

/// UTF-8 with an optional BOM, else Latin-1.
pub fn decode_plain(bytes: &[u8]) -> Ingested {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    match std::str::from_utf8(bytes) {
        Ok(s) => Ingested {
            text: s.to_string(),
            warnings: Vec::new(),
        },
        Err(_) => Ingested {
            text: bytes.iter().map(|&b| char::from(b)).collect(),
            warnings: vec!["input is not valid UTF-8; decoded as Latin-1".into()],
        },
    }
}

/// Text of every paragraph and heading in `content.xml`, one per line.
pub fn odt_text(bytes: &[u8]) -> Result<String, IngestError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| IngestError::CorruptFile(format!("not an ODF archive: {e}")))?;
    let mut xml = String::new();
    archive
        .by_name("content.xml")
        .map_err(|e| IngestError::CorruptFile(format!("archive has no content.xml: {e}")))?
        .read_to_string(&mut xml)
        .map_err(|e| IngestError::CorruptFile(format!("unreadable content.xml: {e}")))?;
    let doc = XmlDocument::parse(&xml).map_err(|e| IngestError::CorruptFile(format!("malformed content.xml: {e}")))?;

    let mut paragraphs = Vec::new();
    collect_paragraphs(doc.root(), &mut paragraphs);
    Ok(paragraphs.join("\n"))
}

fn is_text(node: Node, name: &str) -> bool {
    node.is_element() && node.tag_name().name() == name && node.tag_name().namespace() == Some(TEXT_NS)
}

fn collect_paragraphs(node: Node, out: &mut Vec<String>) {
    for child in node.children() {
        if is_text(child, "p") || is_text(child, "h") {
            let mut text = String::new();
            paragraph_text(child, &mut text);
            out.push(text);
        } else if child.is_element() {
            collect_paragraphs(child, out);
        }
    }
}

fn paragraph_text(node: Node, out: &mut String) {
    for child in node.children() {
        if child.is_text() {
            out.push_str(child.text().unwrap_or_default());
        } else if is_text(child, "s") {
            let n = child
                .attribute((TEXT_NS, "c"))
                .and_then(|c| c.parse().ok())
                .unwrap_or(1usize);
            out.extend(std::iter::repeat_n(' ', n));
        } else if is_text(child, "tab") {
            out.push('\t');
        } else if is_text(child, "line-break") {
            out.push('\n');
        } else if is_text(child, "note") || is_text(child, "annotation") {
            continue;
        } else if child.is_element() {
            paragraph_text(child, out);
        }
    }
}

fn convert_doc(command: &str, bytes: &[u8]) -> Result<Ingested, IngestError> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| IngestError::UnsupportedFormat("the configured .doc converter is empty".into()))?;
    let mut child = Command::new(program)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| IngestError::UnsupportedFormat(format!("cannot run .doc converter `{program}`: {e}")))?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input = bytes.to_vec();
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let output = child
        .wait_with_output()
        .map_err(|e| IngestError::CorruptFile(format!(".doc converter failed: {e}")))?;
    let _ = writer.join();
    if !output.status.success() {
        return Err(IngestError::CorruptFile(format!(
            ".doc converter exited with {}",
            output.status
        )));
    }
    Ok(decode_plain(&output.stdout))
}
