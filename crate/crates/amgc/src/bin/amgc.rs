use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amgc::container::{self, NO_SPLIT};
use amgc::core::aligner::{Aligner, PPM};
use amgc::core::{AlignerConfig, KmerIndex, RefSequence};
use amgc::fasta::{load_fasta_path, write_fasta};
use amgc::fastq::FastqReader;
use amgc::index_cache::{self, CacheStatus};
use amgc::pipeline::{self, CompressOptions, CompressReport, DEFAULT_BLOCK_SIZE};
use amgc::simgen::{self, ErrorProfile, SimConfig};
use amgc::stats::{self, Distributions};
use amgc::{Error, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "amgc",
    version,
    about = "Reference-based FASTQ reads compressor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress the reads of a FASTQ file against a reference.
    Compress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        reference: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        align: AlignArgs,
        /// Block size in bytes of read bases.
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: u64,
        /// Worker threads (0 = one per logical core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Keep identifier and quality lines, stored uncompressed.
        #[arg(long)]
        passthrough: bool,
        /// Load or create a k-mer index cache at this path.
        #[arg(long)]
        index_cache: Option<PathBuf>,
    },
    /// Restore the reads stream from an archive.
    Decompress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        reference: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Write distribution CSVs for a FASTQ file, or the stream breakdown of
    /// an existing archive.
    Stats {
        /// FASTQ input (needs --reference).
        #[arg(short, long, required_unless_present = "archive")]
        input: Option<PathBuf>,
        #[arg(short, long, required_unless_present = "archive")]
        reference: Option<PathBuf>,
        /// Existing archive; only stream_breakdown.csv is written.
        #[arg(long, conflicts_with_all = ["input", "reference"])]
        archive: Option<PathBuf>,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        align: AlignArgs,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Generate a synthetic FASTQ corpus from a reference.
    Gen {
        #[arg(short, long)]
        reference: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Fixed read length (overridden by --min-read-len/--max-read-len).
        #[arg(long, default_value_t = 100)]
        read_len: usize,
        #[arg(long)]
        min_read_len: Option<usize>,
        #[arg(long)]
        max_read_len: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        duplicate_rate: f64,
        #[arg(long, default_value_t = 0.01)]
        jump_rate: f64,
        #[arg(long, default_value_t = 20)]
        max_step: usize,
        /// Mean substitution rate per base.
        #[arg(long, default_value_t = 0.01)]
        error_rate: f64,
        /// Baseline error rate at the read end relative to the flat region.
        #[arg(long, default_value_t = 2.0)]
        tail_gain: f64,
        /// Share of errors placed in degraded trailing segments.
        #[arg(long, default_value_t = 0.6)]
        degraded_share: f64,
        /// Substitution rate inside a degraded segment.
        #[arg(long, default_value_t = 0.3)]
        degraded_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        burst_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        revcomp_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        n_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        random_fraction: f64,
    },
    /// Generate a uniform random reference FASTA.
    GenRef {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct AlignArgs {
    /// Seed k-mer length (8-14).
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Smallest half-length a split may produce.
    #[arg(long, default_value_t = 25)]
    min_len: usize,
    /// Disable recursive splitting.
    #[arg(long)]
    no_split: bool,
    /// Accepted mismatches per base.
    #[arg(long, default_value_t = 0.1)]
    mismatch_rate: f64,
    #[arg(long, default_value_t = 4)]
    seeds: usize,
    /// Index hits examined per seed.
    #[arg(long, default_value_t = 16)]
    max_candidates: usize,
    /// Positions stored per k-mer in the index.
    #[arg(long, default_value_t = 16)]
    max_hits: usize,
}

impl AlignArgs {
    fn config(&self) -> Result<AlignerConfig> {
        if !(8..=14).contains(&self.k) {
            return Err(Error::InvalidParameter("k must be within 8..=14".into()));
        }
        if !(0.0..=1.0).contains(&self.mismatch_rate) {
            return Err(Error::InvalidParameter(
                "mismatch rate must be within [0, 1]".into(),
            ));
        }
        let config = AlignerConfig {
            k: self.k,
            num_seeds: self.seeds,
            mismatch_ppm: (self.mismatch_rate * f64::from(PPM)).round() as u32,
            min_len: if self.no_split {
                usize::MAX
            } else {
                self.min_len
            },
            max_candidates_per_seed: self.max_candidates,
        };
        config.validate()?;
        if !self.no_split && self.min_len >= NO_SPLIT as usize {
            return Err(Error::InvalidParameter("min_len too large".into()));
        }
        Ok(config)
    }
}

fn load_index(
    reference: &RefSequence,
    k: usize,
    cap: usize,
    cache: Option<&Path>,
) -> Result<KmerIndex> {
    if cap == 0 {
        return Err(Error::InvalidParameter(
            "max hits per k-mer must be positive".into(),
        ));
    }
    match cache {
        None => Ok(KmerIndex::build(reference, k, cap)),
        Some(path) => {
            let (index, status) = index_cache::load_or_build(path, reference, k, cap)?;
            let what = match status {
                CacheStatus::Hit => "loaded",
                CacheStatus::Created => "created",
                CacheStatus::Rebuilt => "rebuilt (stale)",
            };
            eprintln!("index cache {}: {what}", path.display());
            Ok(index)
        }
    }
}

fn open_fastq(path: &Path, passthrough: bool) -> Result<FastqReader<BufReader<File>>> {
    Ok(FastqReader::new(
        BufReader::new(File::open(path)?),
        passthrough,
    ))
}

fn print_report(r: &CompressReport, output: &Path) {
    println!("archive            {}", output.display());
    println!("reads              {}", r.reads);
    println!("blocks             {}", r.blocks);
    println!("original bytes     {}", r.original_bytes);
    println!("compressed bytes   {}", r.archive_bytes);
    println!("ratio              {:.4}", r.ratio());
    let t = &r.tally;
    println!(
        "match types        full {} / mismatched {} / split {} / unmapped {}",
        t.full, t.mismatched, t.split, t.unmapped
    );
    println!("mapped bases       {:.4}", t.mapped_fraction());
    println!("streams");
    for (name, bytes) in stats::breakdown(&r.stream_bytes) {
        println!("  {name:<12} {bytes}");
    }
    println!("wall time          {:.3} s", r.wall_time.as_secs_f64());
    match r.peak_memory {
        Some(m) => println!("peak memory        {:.1} MiB", m as f64 / (1024.0 * 1024.0)),
        None => println!("peak memory        unavailable"),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress {
            input,
            reference,
            output,
            align,
            block_size,
            threads,
            passthrough,
            index_cache,
        } => {
            let config = align.config()?;
            let r = load_fasta_path(&reference)?;
            let index = load_index(&r, config.k, align.max_hits, index_cache.as_deref())?;
            let opts = CompressOptions {
                aligner: config,
                max_hits_per_kmer: align.max_hits,
                block_size,
                threads,
                passthrough,
            };
            let input = BufReader::new(File::open(&input)?);
            let (bytes, report) = pipeline::compress_fastq(input, &r, &index, &opts)?;
            write_file(&output, &bytes)?;
            print_report(&report, &output);
        }
        Command::Decompress {
            input,
            reference,
            output,
            threads,
        } => {
            let data = std::fs::read(&input)?;
            container::read_header(&data, None)?;
            let r = load_fasta_path(&reference)?;
            let decoded = pipeline::decompress_bytes(&data, &r, threads)?;
            let mut out = BufWriter::new(File::create(&output)?);
            decoded.write_to(&mut out)?;
            out.flush()?;
            eprintln!(
                "{} reads written to {}",
                decoded.reads.len(),
                output.display()
            );
        }
        Command::Stats {
            input,
            reference,
            archive,
            output,
            align,
            block_size,
            threads,
        } => {
            if let Some(path) = archive {
                let data = std::fs::read(&path)?;
                let (header, _) = container::read_archive(&data, None)?;
                stats::write_bundle(&output, None, &stats::breakdown_from_header(&header))?;
            } else {
                let (input, reference) = (input.unwrap(), reference.unwrap());
                let config = align.config()?;
                let r = load_fasta_path(&reference)?;
                let index = load_index(&r, config.k, align.max_hits, None)?;
                let reads: Vec<Vec<u8>> = open_fastq(&input, false)?
                    .map(|rec| rec.map(|x| x.bases))
                    .collect::<Result<_>>()?;
                let pool = pipeline::build_pool(threads)?;
                let aligner = Aligner::new(&index, &r, config);
                let outcomes: Vec<_> =
                    pool.install(|| reads.par_iter().map(|b| aligner.align_read(b)).collect());
                let mut dist = Distributions::default();
                for (i, o) in outcomes.iter().enumerate() {
                    dist.add(i as u64, o);
                }
                let opts = CompressOptions {
                    aligner: config,
                    max_hits_per_kmer: align.max_hits,
                    block_size,
                    threads,
                    passthrough: false,
                };
                let (_, report) = pipeline::compress_reads(&reads, &r, &index, &opts)?;
                stats::write_bundle(
                    &output,
                    Some(&dist),
                    &stats::breakdown(&report.stream_bytes),
                )?;
            }
            eprintln!("CSV files written to {}", output.display());
        }
        Command::Gen {
            reference,
            output,
            count,
            read_len,
            min_read_len,
            max_read_len,
            seed,
            duplicate_rate,
            jump_rate,
            max_step,
            error_rate,
            tail_gain,
            degraded_share,
            degraded_rate,
            burst_fraction,
            revcomp_fraction,
            n_rate,
            random_fraction,
        } => {
            let r = load_fasta_path(&reference)?;
            let bases: Vec<u8> = (0..r.len())
                .map(|i| {
                    if r.is_valid(i) {
                        amgc::core::base::ascii_of(r.base(i))
                    } else {
                        b'N'
                    }
                })
                .collect();
            let config = SimConfig {
                read_len_min: min_read_len.unwrap_or(read_len),
                read_len_max: max_read_len.unwrap_or(read_len),
                count,
                duplicate_rate,
                jump_rate,
                max_step,
                errors: ErrorProfile {
                    mean_rate: error_rate,
                    tail_gain,
                    degraded_share,
                    degraded_rate,
                    ..ErrorProfile::tail_biased(error_rate)
                },
                burst_fraction,
                revcomp_fraction,
                n_rate,
                random_fraction,
            };
            let reads = simgen::generate(&bases, &config, seed)?;
            let mut out = BufWriter::new(File::create(&output)?);
            simgen::write_fastq(&mut out, &reads)?;
            out.flush()?;
        }
        Command::GenRef {
            output,
            length,
            seed,
        } => {
            if length == 0 {
                return Err(Error::InvalidParameter("length must be positive".into()));
            }
            let bases = simgen::random_reference(length, seed);
            let mut out = BufWriter::new(File::create(&output)?);
            write_fasta(
                &mut out,
                &format!("random length={length} seed={seed}"),
                &bases,
            )?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("amgc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
