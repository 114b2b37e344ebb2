//! Distribution tables over aligned reads.
//!
//! * `refpos_scatter.csv`: `read_index,segment_offset,refpos,strand`, one row
//!   per aligned leaf.
//! * `mispos_hist.csv`: `position,errors,forward,reverse`, mismatches per
//!   read position (leaf offset plus in-leaf offset).
//! * `stream_breakdown.csv`: `stream,bytes,fraction` per coded stream.

use std::io::Write;
use std::path::Path;

use amgc_core::{MatchNode, MatchOutcome, Strand, StreamKind};

use crate::container::{ArchiveHeader, SIDECAR_SLOT, SLOTS_PER_BLOCK};

pub const REFPOS_FILE: &str = "refpos_scatter.csv";
pub const MISPOS_FILE: &str = "mispos_hist.csv";
pub const BREAKDOWN_FILE: &str = "stream_breakdown.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScatterRow {
    pub read_index: u64,
    pub segment_offset: u32,
    pub refpos: u32,
    pub strand: Strand,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HistRow {
    pub forward: u64,
    pub reverse: u64,
}

impl HistRow {
    pub fn errors(&self) -> u64 {
        self.forward + self.reverse
    }
}

#[derive(Debug, Clone, Default)]
pub struct Distributions {
    pub scatter: Vec<ScatterRow>,
    /// Indexed by read position.
    pub hist: Vec<HistRow>,
}

impl Distributions {
    /// Adds one read's outcome; `read_index` is its corpus-wide index.
    pub fn add(&mut self, read_index: u64, outcome: &MatchOutcome) {
        if self.hist.len() < outcome.read_length {
            self.hist.resize(outcome.read_length, HistRow::default());
        }
        outcome.root.for_each_leaf(&mut |offset, leaf| {
            if let MatchNode::Match(m) = leaf {
                self.scatter.push(ScatterRow {
                    read_index,
                    segment_offset: offset as u32,
                    refpos: m.refpos,
                    strand: m.strand,
                });
                for &p in &m.mispos {
                    let row = &mut self.hist[offset + p as usize];
                    match m.strand {
                        Strand::Forward => row.forward += 1,
                        Strand::Reverse => row.reverse += 1,
                    }
                }
            }
        });
    }
}

/// `(name, bytes)` per stream in container order; the sidecar is listed
/// only when nonempty.
pub fn breakdown(slot_bytes: &[u64; SLOTS_PER_BLOCK]) -> Vec<(&'static str, u64)> {
    let mut rows: Vec<(&'static str, u64)> = StreamKind::ALL
        .iter()
        .map(|k| (k.name(), slot_bytes[k.index()]))
        .collect();
    if slot_bytes[SIDECAR_SLOT] > 0 {
        rows.push(("Sidecar", slot_bytes[SIDECAR_SLOT]));
    }
    rows
}

pub fn breakdown_from_header(header: &ArchiveHeader) -> Vec<(&'static str, u64)> {
    breakdown(&header.slot_totals())
}

pub fn write_scatter<W: Write>(out: &mut W, rows: &[ScatterRow]) -> std::io::Result<()> {
    writeln!(out, "read_index,segment_offset,refpos,strand")?;
    for r in rows {
        let s = match r.strand {
            Strand::Forward => '+',
            Strand::Reverse => '-',
        };
        writeln!(
            out,
            "{},{},{},{s}",
            r.read_index, r.segment_offset, r.refpos
        )?;
    }
    Ok(())
}

pub fn write_hist<W: Write>(out: &mut W, hist: &[HistRow]) -> std::io::Result<()> {
    writeln!(out, "position,errors,forward,reverse")?;
    for (i, h) in hist.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", h.errors(), h.forward, h.reverse)?;
    }
    Ok(())
}

pub fn write_breakdown<W: Write>(out: &mut W, rows: &[(&str, u64)]) -> std::io::Result<()> {
    let total: u64 = rows.iter().map(|r| r.1).sum();
    writeln!(out, "stream,bytes,fraction")?;
    for (name, bytes) in rows {
        let f = if total == 0 {
            0.0
        } else {
            *bytes as f64 / total as f64
        };
        writeln!(out, "{name},{bytes},{f:.6}")?;
    }
    Ok(())
}

/// Writes the three CSV files into `dir`, creating it if needed.
pub fn write_bundle(
    dir: &Path,
    dist: Option<&Distributions>,
    breakdown_rows: &[(&str, u64)],
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let create = |name: &str| -> std::io::Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(
            dir.join(name),
        )?))
    };
    if let Some(d) = dist {
        let mut f = create(REFPOS_FILE)?;
        write_scatter(&mut f, &d.scatter)?;
        f.flush()?;
        let mut f = create(MISPOS_FILE)?;
        write_hist(&mut f, &d.hist)?;
        f.flush()?;
    }
    let mut f = create(BREAKDOWN_FILE)?;
    write_breakdown(&mut f, breakdown_rows)?;
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use amgc_core::SegmentMatch;

    #[test]
    fn leaf_rows_and_histogram() {
        let left = MatchNode::Match(SegmentMatch {
            refpos: 100,
            strand: Strand::Forward,
            len: 4,
            mispos: vec![1, 3],
            misvalues: b"AA".to_vec(),
        });
        let right = MatchNode::Match(SegmentMatch {
            refpos: 50,
            strand: Strand::Reverse,
            len: 4,
            mispos: vec![0],
            misvalues: b"C".to_vec(),
        });
        let o = MatchOutcome {
            root: MatchNode::Split(Box::new(left), Box::new(right)),
            read_length: 8,
        };
        let mut d = Distributions::default();
        d.add(7, &o);
        assert_eq!(d.scatter.len(), 2);
        assert_eq!(d.scatter[1].segment_offset, 4);
        assert_eq!(d.scatter[1].refpos, 50);
        let errs: Vec<(u64, u64)> = d.hist.iter().map(|h| (h.forward, h.reverse)).collect();
        assert_eq!(
            errs,
            [
                (0, 0),
                (1, 0),
                (0, 0),
                (1, 0),
                (0, 1),
                (0, 0),
                (0, 0),
                (0, 0)
            ]
        );

        let mut out = Vec::new();
        write_scatter(&mut out, &d.scatter).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "read_index,segment_offset,refpos,strand\n7,0,100,+\n7,4,50,-\n"
        );
    }

    #[test]
    fn breakdown_fractions() {
        let mut slots = [0u64; SLOTS_PER_BLOCK];
        slots[0] = 30;
        slots[7] = 10;
        let rows = breakdown(&slots);
        assert_eq!(rows.len(), 9);
        let mut out = Vec::new();
        write_breakdown(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("stream,bytes,fraction\nPosEqual,30,0.750000\n"));
        assert!(text.contains("MatchMeta,10,0.250000\n"));
    }
}
