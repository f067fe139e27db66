use std::path::Path;

use serde_json::{Map, Value};

use internmatch_core::io::{write_file, Meta};
use internmatch_core::Result;

use crate::Format;

/// A flat result table written as CSV (metadata as `#` lines) or JSON.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Meta) -> String {
        let mut out: String = meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(cell))
                .expect("writing to memory");
        }
        out.push_str(
            &String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8"),
        );
        out
    }

    pub fn to_json(&self, meta: &Meta) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.header
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.to_string(), v.clone()))
                        .collect::<Map<_, _>>(),
                )
            })
            .collect();
        let mut doc = Map::new();
        doc.insert(
            "meta".into(),
            serde_json::to_value(meta).expect("string map"),
        );
        doc.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        s.push('\n');
        s
    }

    /// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str, format: Format, meta: &Meta) -> Result<()> {
        match format {
            Format::Csv => write_file(&dir.join(format!("{stem}.csv")), &self.to_csv(meta)),
            Format::Json => write_file(&dir.join(format!("{stem}.json")), &self.to_json(meta)),
        }
    }
}

pub fn meta(pairs: &[(&str, String)]) -> Meta {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}
