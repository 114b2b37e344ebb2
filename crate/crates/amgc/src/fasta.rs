//! Reference FASTA loading. All records are concatenated in file order.

use std::io::BufRead;

use amgc_core::refindex::RefBuilder;
use amgc_core::RefSequence;

use crate::error::{Error, Result};

pub fn load_fasta<R: BufRead>(mut input: R) -> Result<RefSequence> {
    let mut builder = RefBuilder::new();
    let mut line = Vec::new();
    let mut seen_header = false;
    let mut line_no = 0u64;
    loop {
        line.clear();
        if input.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        line_no += 1;
        let l = line.trim_ascii_end();
        match l.first() {
            None => continue,
            Some(b'>') => seen_header = true,
            Some(b';') => continue,
            Some(_) => {
                if !seen_header {
                    return Err(Error::Fasta(format!(
                        "line {line_no}: sequence data before the first '>' header"
                    )));
                }
                if let Some(bad) = l.iter().find(|b| !b.is_ascii_graphic()) {
                    return Err(Error::Fasta(format!(
                        "line {line_no}: unexpected byte 0x{bad:02x}"
                    )));
                }
                builder.push_bases(l);
            }
        }
    }
    if builder.is_empty() {
        return Err(Error::Fasta("no sequence lines".into()));
    }
    Ok(builder.finish()?)
}

pub fn load_fasta_path(path: &std::path::Path) -> Result<RefSequence> {
    let f = std::fs::File::open(path)?;
    load_fasta(std::io::BufReader::new(f))
}

/// Writes `bases` as a single-record FASTA with 60-column lines.
pub fn write_fasta<W: std::io::Write>(
    out: &mut W,
    name: &str,
    bases: &[u8],
) -> std::io::Result<()> {
    writeln!(out, ">{name}")?;
    for chunk in bases.chunks(60) {
        out.write_all(chunk)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
