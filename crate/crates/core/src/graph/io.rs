//! CSV and JSON formats for ownership graphs.
//!
//! Nodes: `id,kind,name,activity_code,region,strategic,foreign,public`.
//! Edges: `owner,owned,share`. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use super::{EdgeRecord, Entity, EntityKind, GraphRecords, OwnershipGraph};
use crate::error::{Error, Result};
use crate::scalar::Share;

pub const NODE_COLUMNS: [&str; 8] = [
    "id",
    "kind",
    "name",
    "activity_code",
    "region",
    "strategic",
    "foreign",
    "public",
];
pub const EDGE_COLUMNS: [&str; 3] = ["owner", "owned", "share"];

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(source)
}

struct Columns(Vec<Option<usize>>);

impl Columns {
    fn locate(header: &StringRecord, wanted: &[&str], required: &[&str]) -> Result<Self> {
        let find = |name: &str| header.iter().position(|h| h == name);
        for name in required {
            if find(name).is_none() {
                return Err(Error::Parse {
                    row: 1,
                    message: format!("missing column {name:?}"),
                });
            }
        }
        Ok(Columns(wanted.iter().map(|w| find(w)).collect()))
    }

    fn get<'r>(&self, record: &'r StringRecord, col: usize) -> &'r str {
        self.0[col].and_then(|i| record.get(i)).unwrap_or("")
    }
}

fn line_of(record: &StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn optional(text: &str) -> Option<String> {
    (!text.is_empty()).then(|| text.to_string())
}

fn parse_bool(text: &str, row: usize, column: &str) -> Result<bool> {
    match text {
        "" | "false" => Ok(false),
        "true" => Ok(true),
        other => Err(Error::Parse {
            row,
            message: format!("{column}: expected true/false, got {other:?}"),
        }),
    }
}

pub fn read_nodes<R: Read>(source: R) -> Result<Vec<Entity>> {
    let mut rdr = reader(source);
    let cols = Columns::locate(rdr.headers()?, &NODE_COLUMNS, &["id", "kind"])?;
    let mut entities = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = line_of(&record);
        let id = cols.get(&record, 0);
        if id.is_empty() {
            return Err(Error::Parse {
                row,
                message: "empty id".into(),
            });
        }
        let kind = match cols.get(&record, 1) {
            "person" => EntityKind::Person,
            "company" => EntityKind::Company,
            other => {
                return Err(Error::Parse {
                    row,
                    message: format!("kind must be person or company, got {other:?}"),
                })
            }
        };
        entities.push(Entity {
            id: id.to_string(),
            kind,
            name: cols.get(&record, 2).to_string(),
            activity_code: optional(cols.get(&record, 3)),
            region: optional(cols.get(&record, 4)),
            strategic: parse_bool(cols.get(&record, 5), row, "strategic")?,
            foreign: parse_bool(cols.get(&record, 6), row, "foreign")?,
            public: parse_bool(cols.get(&record, 7), row, "public")?,
        });
    }
    Ok(entities)
}

pub fn read_edges<S: Share, R: Read>(source: R) -> Result<Vec<EdgeRecord<S>>> {
    let mut rdr = reader(source);
    let cols = Columns::locate(rdr.headers()?, &EDGE_COLUMNS, &EDGE_COLUMNS)?;
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = line_of(&record);
        let raw = cols.get(&record, 2);
        let share = S::parse_share(raw).ok_or_else(|| Error::Parse {
            row,
            message: format!("share is not a number: {raw:?}"),
        })?;
        edges.push(EdgeRecord {
            owner: cols.get(&record, 0).to_string(),
            owned: cols.get(&record, 1).to_string(),
            share,
            row: Some(row),
        });
    }
    Ok(edges)
}

/// Parses both CSV sources without structural checks.
pub fn read_records<S: Share>(nodes: impl Read, edges: impl Read) -> Result<GraphRecords<S>> {
    Ok(GraphRecords {
        entities: read_nodes(nodes)?,
        edges: read_edges(edges)?,
    })
}

pub fn load_graph<S: Share>(nodes: impl Read, edges: impl Read) -> Result<OwnershipGraph<S>> {
    OwnershipGraph::from_records(read_records(nodes, edges)?)
}

pub fn load_graph_files<S: Share>(nodes: impl AsRef<Path>, edges: impl AsRef<Path>) -> Result<OwnershipGraph<S>> {
    load_graph(File::open(nodes)?, File::open(edges)?)
}

pub fn write_nodes<S: Share, W: Write>(g: &OwnershipGraph<S>, sink: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(sink);
    wtr.write_record(NODE_COLUMNS)?;
    let flag = |b: bool| if b { "true" } else { "false" };
    for e in g.entities() {
        wtr.write_record([
            e.id.as_str(),
            e.kind.as_str(),
            e.name.as_str(),
            e.activity_code.as_deref().unwrap_or(""),
            e.region.as_deref().unwrap_or(""),
            flag(e.strategic),
            flag(e.foreign),
            flag(e.public),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_edges<S: Share, W: Write>(g: &OwnershipGraph<S>, sink: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(sink);
    wtr.write_record(EDGE_COLUMNS)?;
    for e in g.edges() {
        wtr.write_record([g.id(e.owner), g.id(e.owned), &e.share.format_share()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_graph_files<S: Share>(g: &OwnershipGraph<S>, nodes: impl AsRef<Path>, edges: impl AsRef<Path>) -> Result<()> {
    write_nodes(g, File::create(nodes)?)?;
    write_edges(g, File::create(edges)?)?;
    Ok(())
}

/// `{"entities": [...], "edges": [{"owner", "owned", "share"}]}`
pub fn read_json<S: Share>(source: impl Read) -> Result<OwnershipGraph<S>> {
    let records: GraphRecords<S> = serde_json::from_reader(source)?;
    OwnershipGraph::from_records(records)
}

pub fn to_json_value<S: Share>(g: &OwnershipGraph<S>) -> serde_json::Value {
    serde_json::to_value(g.to_records()).expect("graph records serialize")
}
