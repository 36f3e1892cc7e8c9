//! Number formatting and emission.
//!
//! Every float is printed with 17 significant digits so it parses back to the
//! same `f64`. CSV always uses `.` and `,` whatever the locale.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{Number, Value};

use crate::error::CliError;

/// `x` in round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rewrites every non-integer number in `value` with 17 significant digits.
pub fn round_trip_floats(value: &mut Value) {
    match value {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            if let Some(x) = n.as_f64() {
                if let Ok(exact) = Number::from_str(&num(x)) {
                    *n = exact;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_trip_floats),
        Value::Object(map) => map.values_mut().for_each(round_trip_floats),
        _ => {}
    }
}

/// One JSON document on one line.
pub fn json_line(mut value: Value) -> String {
    round_trip_floats(&mut value);
    let mut s = value.to_string();
    s.push('\n');
    s
}

/// Comma-separated rows under a fixed header.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Self {
            writer,
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.width, "row width must match header");
        self.writer.write_record(&cells).expect("writing to memory");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("csv cells are utf-8")
    }
}

/// Writes `text` to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            // a closed pipe (`| head`) is the reader's choice, not a failure
            match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
                Err(e) if e.kind() == ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e12, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn json_keeps_integers_and_rewrites_floats() {
        let line = json_line(json!({"n": 64, "x": 0.1, "v": [1.5, null]}));
        assert_eq!(line, "{\"n\":64,\"v\":[1.5000000000000000e+0,null],\"x\":1.0000000000000001e-1}\n");
        let back: Value = serde_json::from_str(&line).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }
}
