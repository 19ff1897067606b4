//! Waveform files.
//!
//! Text: a header line
//! `# sample_rate_hz=<int> trigger_index=<int|-1> label=<0|1|-1>` followed by
//! one sample per line with 17 significant digits.
//!
//! Binary (little-endian): magic `QRFW`, `u32` version, `u64` sample count,
//! then a metadata block (`u64` sample rate in Hz, `i64` trigger index,
//! `i64` label; -1 means absent) and the samples as `f64`.

use std::io::{BufRead, Read, Write};

use super::waveform::WaveformRecord;
use crate::error::{Error, Module, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"QRFW";
pub const BINARY_VERSION: u32 = 1;

/// Formats a float with 17 significant digits; parsing it back is exact.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn sample_rate_hz(w: &WaveformRecord) -> Result<u64> {
    let r = w.sample_rate;
    if r.fract() != 0.0 || r <= 0.0 || r > u64::MAX as f64 {
        return Err(Error::invalid(
            Module::Emission,
            format!("sample rate {r} is not a whole number of Hz"),
        ));
    }
    Ok(r as u64)
}

fn opt_to_i64(v: Option<usize>) -> i64 {
    v.map_or(-1, |x| x as i64)
}

pub fn write_text<W: Write>(w: &WaveformRecord, mut out: W) -> Result<()> {
    w.validate()?;
    writeln!(
        out,
        "# sample_rate_hz={} trigger_index={} label={}",
        sample_rate_hz(w)?,
        opt_to_i64(w.trigger_index),
        opt_to_i64(w.label.map(usize::from)),
    )?;
    for s in &w.samples {
        writeln!(out, "{}", fmt_f64(*s))?;
    }
    Ok(())
}

fn header_field<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::parse(Module::Emission, 1, format!("header is missing `{key}`")))
}

fn parse_optional_index(s: &str, what: &str) -> Result<Option<usize>> {
    let v: i64 = s
        .parse()
        .map_err(|_| Error::parse(Module::Emission, 1, format!("bad {what} `{s}`")))?;
    match v {
        -1 => Ok(None),
        v if v >= 0 => Ok(Some(v as usize)),
        _ => Err(Error::parse(Module::Emission, 1, format!("bad {what} `{s}`"))),
    }
}

fn label_from(v: Option<usize>, line: usize) -> Result<Option<u8>> {
    match v {
        None => Ok(None),
        Some(l) if l <= 1 => Ok(Some(l as u8)),
        Some(l) => Err(Error::parse(Module::Emission, line, format!("label {l} is not 0 or 1"))),
    }
}

pub fn read_text<R: BufRead>(input: R) -> Result<WaveformRecord> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(Module::Emission, 1, "empty waveform file"))??;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(Module::Emission, 1, "header must start with `#`"))?;
    let rate: u64 = header_field(header, "sample_rate_hz")?
        .parse()
        .map_err(|_| Error::parse(Module::Emission, 1, "bad sample_rate_hz"))?;
    let trigger = parse_optional_index(header_field(header, "trigger_index")?, "trigger_index")?;
    let label = label_from(parse_optional_index(header_field(header, "label")?, "label")?, 1)?;

    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::parse(Module::Emission, i + 2, format!("bad sample `{t}`")))?;
        samples.push(v);
    }
    let w = WaveformRecord {
        sample_rate: rate as f64,
        samples,
        trigger_index: trigger,
        label,
    };
    w.validate()?;
    Ok(w)
}

pub fn write_binary<W: Write>(w: &WaveformRecord, mut out: W) -> Result<()> {
    w.validate()?;
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(w.samples.len() as u64).to_le_bytes())?;
    out.write_all(&sample_rate_hz(w)?.to_le_bytes())?;
    out.write_all(&opt_to_i64(w.trigger_index).to_le_bytes())?;
    out.write_all(&opt_to_i64(w.label.map(usize::from)).to_le_bytes())?;
    for s in &w.samples {
        out.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<WaveformRecord> {
    let magic: [u8; 4] = read_array(&mut input)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::parse(Module::Emission, 0, "bad magic, expected QRFW"));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != BINARY_VERSION {
        return Err(Error::parse(
            Module::Emission,
            0,
            format!("unsupported waveform version {version}"),
        ));
    }
    let count = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let rate = u64::from_le_bytes(read_array(&mut input)?);
    let trigger = i64::from_le_bytes(read_array(&mut input)?);
    let label = i64::from_le_bytes(read_array(&mut input)?);
    let to_opt = |v: i64, what: &str| -> Result<Option<usize>> {
        match v {
            -1 => Ok(None),
            v if v >= 0 => Ok(Some(v as usize)),
            _ => Err(Error::parse(Module::Emission, 0, format!("bad {what} {v}"))),
        }
    };
    let mut samples = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        samples.push(f64::from_le_bytes(read_array(&mut input)?));
    }
    let w = WaveformRecord {
        sample_rate: rate as f64,
        samples,
        trigger_index: to_opt(trigger, "trigger index")?,
        label: label_from(to_opt(label, "label")?, 0)?,
    };
    w.validate()?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WaveformRecord {
        WaveformRecord::new(1e9, vec![0.1, -0.0, 1.0 / 3.0, -2.5e-7, 1e300])
            .unwrap()
            .with_trigger(2)
            .unwrap()
            .with_label(1)
    }

    #[test]
    fn text_header_layout() {
        let mut buf = Vec::new();
        write_text(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# sample_rate_hz=1000000000 trigger_index=2 label=1"
        );
        assert_eq!(lines.next().unwrap(), "1.0000000000000001e-1");
    }

    #[test]
    fn absent_metadata_is_minus_one() {
        let w = WaveformRecord::new(1e9, vec![1.0]).unwrap();
        let mut buf = Vec::new();
        write_text(&w, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("# sample_rate_hz=1000000000 trigger_index=-1 label=-1\n"));
    }

    #[test]
    fn binary_header_layout() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"QRFW");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 5);
        assert_eq!(buf.len(), 16 + 24 + 5 * 8);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(read_binary(&buf[..]).is_err());
    }

    #[test]
    fn fractional_sample_rate_rejected() {
        let w = WaveformRecord::new(1.5, vec![1.0]).unwrap();
        assert!(write_text(&w, Vec::new()).is_err());
    }
}
