//! Text formats: every float is written with 17 significant digits so that
//! CSV and JSON output parses back to the identical `f64`.

use std::io::{Read, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::discriminator::ChannelMatrix;
use crate::error::{Error, Result};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON formatter that prints floats through [`fmt17`].
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// `N` rows of `N` comma-separated entries, row = input index. A leading
/// `# seed=<n>` comment records the RNG seed when one was used.
pub fn write_channel_csv<W: Write>(c: &ChannelMatrix, seed: Option<u64>, mut out: W) -> Result<()> {
    if let Some(s) = seed {
        writeln!(out, "# seed={s}")?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in c.rows() {
        w.write_record(row.iter().map(|v| fmt17(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_channel_csv<R: Read>(input: R) -> Result<ChannelMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    ChannelMatrix::from_rows(rows)
}

/// One row of a long-format sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub half_count: usize,
    pub r: f64,
    pub theta: f64,
    pub quantity: String,
    pub value: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], seed: u64, mut out: W) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "r", "theta", "quantity", "value"])?;
    for row in rows {
        w.write_record([
            row.half_count.to_string(),
            fmt17(row.r),
            fmt17(row.theta),
            row.quantity.clone(),
            fmt17(row.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
        let s = fmt17(1.0 / 3.0);
        let mantissa = s.split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17);
    }

    #[test]
    fn json_uses_seventeen_digits() {
        let text = to_json_string(&serde_json::json!({"x": 0.25, "n": 3})).unwrap();
        assert_eq!(text, "{\"n\":3,\"x\":2.5000000000000000e-1}\n");
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.25));
    }

    #[test]
    fn csv_channel_with_seed_comment() {
        let c = ChannelMatrix::circulant(&[0.5, 0.25, 0.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        write_channel_csv(&c, Some(42), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=42\n"));
        assert_eq!(text.lines().count(), 5);
        assert_eq!(read_channel_csv(buf.as_slice()).unwrap(), c);
    }

    proptest! {
        #[test]
        fn channel_text_round_trips_bit_exactly(raw in prop::collection::vec(prop::collection::vec(1e-6f64..1.0, 5), 5)) {
            let rows: Vec<Vec<f64>> = raw
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / s).collect()
                })
                .collect();
            let c = ChannelMatrix::from_rows(rows).unwrap();
            let mut buf = Vec::new();
            write_channel_csv(&c, None, &mut buf).unwrap();
            prop_assert_eq!(&read_channel_csv(buf.as_slice()).unwrap(), &c);
            let json = to_json_string(&c).unwrap();
            let back: ChannelMatrix = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &c);
        }
    }
}
