//! FASTQ input and reads-stream output.
//!
//! Only plain-text, 4-line records are accepted. Bases are uppercased; any
//! symbol outside `ACGTN` (either case) is an error.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FastqRecord {
    /// Uppercase bases.
    pub bases: Vec<u8>,
    /// Identifier, `+` and quality lines verbatim, kept only when requested.
    pub annotation: Option<Annotation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotation {
    pub id: Vec<u8>,
    pub plus: Vec<u8>,
    pub qual: Vec<u8>,
}

/// Streaming FASTQ parser.
pub struct FastqReader<R> {
    inner: R,
    keep_annotations: bool,
    record: u64,
    line: Vec<u8>,
    saw_lowercase: bool,
    done: bool,
}

impl<R: BufRead> FastqReader<R> {
    pub fn new(inner: R, keep_annotations: bool) -> Self {
        FastqReader {
            inner,
            keep_annotations,
            record: 0,
            line: Vec::new(),
            saw_lowercase: false,
            done: false,
        }
    }

    /// Whether any lowercase base was normalized so far.
    pub fn saw_lowercase(&self) -> bool {
        self.saw_lowercase
    }

    /// Reads one line without its terminator. `None` at end of input.
    fn next_line(&mut self) -> Result<Option<Vec<u8>>> {
        self.line.clear();
        if self.inner.read_until(b'\n', &mut self.line)? == 0 {
            return Ok(None);
        }
        if self.line.last() == Some(&b'\n') {
            self.line.pop();
        }
        if self.line.last() == Some(&b'\r') {
            self.line.pop();
        }
        Ok(Some(std::mem::take(&mut self.line)))
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Fastq {
            record: self.record,
            reason: reason.into(),
        }
    }

    fn read_record(&mut self) -> Result<Option<FastqRecord>> {
        // Blank lines are tolerated only at the very end.
        let id = loop {
            match self.next_line()? {
                None => return Ok(None),
                Some(l) if l.is_empty() => continue,
                Some(l) => break l,
            }
        };
        if id.first() != Some(&b'@') {
            return Err(self.fail("identifier line does not start with '@'"));
        }
        let mut bases = self
            .next_line()?
            .ok_or_else(|| self.fail("incomplete record (line count not a multiple of 4)"))?;
        let plus = self
            .next_line()?
            .ok_or_else(|| self.fail("incomplete record (line count not a multiple of 4)"))?;
        let qual = self
            .next_line()?
            .ok_or_else(|| self.fail("incomplete record (line count not a multiple of 4)"))?;
        if plus.first() != Some(&b'+') {
            return Err(self.fail("separator line does not start with '+'"));
        }
        if bases.is_empty() {
            return Err(self.fail("empty bases line"));
        }
        if bases.len() != qual.len() {
            return Err(self.fail(format!(
                "bases/quality length mismatch ({} vs {})",
                bases.len(),
                qual.len()
            )));
        }
        for b in &mut bases {
            match *b {
                b'A' | b'C' | b'G' | b'T' | b'N' => {}
                b'a' | b'c' | b'g' | b't' | b'n' => {
                    *b = b.to_ascii_uppercase();
                    self.saw_lowercase = true;
                }
                other => {
                    return Err(self.fail(format!("illegal base symbol {:?}", char::from(other))))
                }
            }
        }
        let annotation = self
            .keep_annotations
            .then_some(Annotation { id, plus, qual });
        self.record += 1;
        Ok(Some(FastqRecord { bases, annotation }))
    }
}

impl<R: BufRead> Iterator for FastqReader<R> {
    type Item = Result<FastqRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let r = self.read_record().transpose();
        if !matches!(r, Some(Ok(_))) {
            self.done = true;
        }
        r
    }
}

/// Parses a whole FASTQ input.
pub fn parse_fastq<R: BufRead>(input: R, keep_annotations: bool) -> Result<Vec<FastqRecord>> {
    FastqReader::new(input, keep_annotations).collect()
}

/// Writes one read as a bases-only line.
pub fn write_bases_line<W: Write>(out: &mut W, bases: &[u8]) -> std::io::Result<()> {
    out.write_all(bases)?;
    out.write_all(b"\n")
}

/// Writes one full FASTQ record.
pub fn write_record<W: Write>(out: &mut W, bases: &[u8], ann: &Annotation) -> std::io::Result<()> {
    for line in [&ann.id[..], bases, &ann.plus[..], &ann.qual[..]] {
        out.write_all(line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let r = parse_fastq(&b"@r1\nACGT\n+\nIIII\n"[..], false).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].bases, b"ACGT");
        assert!(r[0].annotation.is_none());
    }

    #[test]
    fn empty_input() {
        assert!(parse_fastq(&b""[..], false).unwrap().is_empty());
    }

    #[test]
    fn lowercase_normalized_and_annotations_kept() {
        let input = b"@a\nACGTN\n+\nIIIII\n@b desc\r\nacgt\r\n+b\r\n!!!!\r\n";
        let mut reader = FastqReader::new(&input[..], true);
        let recs: Vec<FastqRecord> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert!(reader.saw_lowercase());
        // line-splitting oracle over the same bytes
        let lines: Vec<&[u8]> = input
            .split(|&b| b == b'\n')
            .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
            .collect();
        assert_eq!(recs[0].bases, lines[1]);
        assert_eq!(recs[1].bases, lines[5].to_ascii_uppercase());
        let ann = recs[1].annotation.as_ref().unwrap();
        assert_eq!(ann.id, b"@b desc");
        assert_eq!(ann.plus, b"+b");
        assert_eq!(ann.qual, b"!!!!");
    }

    #[test]
    fn errors_carry_record_index() {
        let cases: [&[u8]; 5] = [
            b"@a\nACGT\n+\nIIII\n@b\nACGT\n",
            b"@a\nACGT\n+\nIII\n",
            b"@a\nACGT\n+\nIIII\n@b\nACXT\n+\nIIII\n",
            b"a\nACGT\n+\nIIII\n",
            b"@a\n\n+\n\n",
        ];
        let expect_record = [1, 0, 1, 0, 0];
        for (input, rec) in cases.iter().zip(expect_record) {
            match parse_fastq(*input, false) {
                Err(Error::Fastq { record, .. }) => assert_eq!(record, rec),
                other => panic!("expected FASTQ error, got {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_bases_lines() {
        let input = b"@a\nACgt\n+\nIIII\n@b\nNNA\n+\nIII\n";
        let recs = parse_fastq(&input[..], false).unwrap();
        let mut out = Vec::new();
        for r in &recs {
            write_bases_line(&mut out, &r.bases).unwrap();
        }
        assert_eq!(out, b"ACGT\nNNA\n");
    }
}
