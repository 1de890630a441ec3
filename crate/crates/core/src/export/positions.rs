use super::{format_float, ExportError};

/// CSV with header `image_id,x,y`.
pub fn write_positions<'a>(ids: impl IntoIterator<Item = &'a str>, positions: &[[f64; 2]]) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(["image_id", "x", "y"]).expect("in-memory write");
    for (id, p) in ids.into_iter().zip(positions) {
        writer
            .write_record([id, &format_float(p[0]), &format_float(p[1])])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn parse_positions(text: &str) -> Result<Vec<(String, [f64; 2])>, ExportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ExportError::Positions(e.to_string()))?;
        let field = |k: usize| {
            record
                .get(k)
                .ok_or_else(|| ExportError::Positions(format!("row {}: missing column {k}", i + 1)))
        };
        let coord = |k: usize| -> Result<f64, ExportError> {
            field(k)?
                .trim()
                .parse()
                .map_err(|e| ExportError::Positions(format!("row {}: {e}", i + 1)))
        };
        out.push((field(0)?.to_string(), [coord(1)?, coord(2)?]));
    }
    Ok(out)
}
