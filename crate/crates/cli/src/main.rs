//! `figoa` command-line front end.
//!
//! Exit status: 0 on success, 1 when verification rejects, 2 on usage or I/O
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use figoa_core::crypto::{KeyLocator, KeyPair, KeyRegistry, PublicKey, SchemeId};
use figoa_core::forwarder::Mode;
use figoa_core::fragmenter::{fragment_content, refragment};
use figoa_core::time::SimTime;
use figoa_core::verifier::{assemble, Decision, SignaturePolicy, Verifier};
use figoa_core::wire::{ContentFragment, ContentObject, Name};
use figoa_sim::model::{latency_curve, latency_model, segmentation_overhead, LatencyParams, OverheadParams};
use figoa_sim::{scenarios, ConsumerOutcome};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "figoa", version, about = "Secure cut-through fragmentation of signed named content")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sign a file as one content object and write its fragments.
    Fragment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        name: Name,
        /// Private key file written by `keygen`.
        #[arg(long)]
        key: PathBuf,
        /// Name the key instead of embedding the public key.
        #[arg(long)]
        key_name: Option<Name>,
        #[arg(long)]
        mtu: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Split one fragment file further for a smaller MTU.
    Refragment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        mtu: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Feed a directory of fragment files through the verifier.
    Verify {
        #[arg(long)]
        frags: PathBuf,
        /// Public key file; when given the signature must verify with it.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Feed the fragments in a seeded random order.
        #[arg(long)]
        shuffle: Option<u64>,
        /// Write the reassembled payload here on success.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a key pair: `<out>` holds the private key, `<out>.pub` the public key.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "ed25519")]
        scheme: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the discrete-event simulator.
    Simulate {
        #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
        config: Option<PathBuf>,
        /// Built-in scenario: three-node, line8, mumtu or corrupt.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Force every node into this mode.
        #[arg(long)]
        mode: Option<Mode>,
        /// Flows per link, for built-in scenarios.
        #[arg(long)]
        flows: Option<u32>,
    },
    /// Closed-form per-hop reassembly latency table.
    LatencyTable {
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 20, 30, 50, 100])]
        flows: Vec<u32>,
        /// Hops.
        #[arg(short = 'H', long, default_value_t = 8)]
        hops: usize,
        /// Per-link latency in milliseconds.
        #[arg(short = 'd', long, default_value_t = 10.0)]
        latency: f64,
        /// Bandwidth in Mb/s.
        #[arg(long, default_value_t = 100.0)]
        bw: f64,
        #[arg(long, default_value_t = 1300.0)]
        frag_size: f64,
        #[arg(short = 'k', default_value_t = 7)]
        k: u32,
    },
    /// Reassembly / cut-through latency ratio against fragment count.
    LatencyCurve {
        /// Flows on each hop, in path order.
        #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 50, 100, 100, 50, 20, 10])]
        flows: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [8400, 16800, 33600])]
        objects: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        k_max: u32,
        /// Per-fragment header bytes.
        #[arg(long, default_value_t = 100)]
        header: u64,
        #[arg(short = 'd', long, default_value_t = 10.0)]
        latency: f64,
        #[arg(long, default_value_t = 100.0)]
        bw: f64,
    },
    /// Byte overhead of producer-side segmentation into signed pieces.
    Overhead {
        #[arg(long, value_delimiter = ',', default_values_t = [1024, 4096, 8192, 16384, 65536])]
        objects: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1500])]
        mtu: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [192, 256])]
        sig_bytes: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        key_locator_bytes: u64,
        #[arg(long, default_value_t = 12)]
        header_bytes: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Fragment { input, name, key, key_name, mtu, out_dir } => {
            cmd_fragment(&input, name, &key, key_name, mtu, &out_dir)
        }
        Command::Refragment { input, mtu, out_dir } => cmd_refragment(&input, mtu, &out_dir),
        Command::Verify { frags, key, shuffle, out } => cmd_verify(&frags, key.as_deref(), shuffle, out.as_deref()),
        Command::Keygen { out, scheme, seed } => cmd_keygen(&out, &scheme, seed),
        Command::Simulate { config, scenario, seed, trace, mode, flows } => {
            cmd_simulate(config.as_deref(), scenario.as_deref(), seed, trace.as_deref(), mode, flows)
        }
        Command::LatencyTable { flows, hops, latency, bw, frag_size, k } => {
            cmd_latency_table(&flows, hops, latency, bw, frag_size, k)
        }
        Command::LatencyCurve { flows, objects, k_max, header, latency, bw } => {
            let rows =
                latency_curve(&vec![latency * 1e-3; flows.len()], bw * 1e6, &flows, &objects, 1..=k_max, header)?;
            println!("object_bytes,k,fragment_bytes,reassembly_ms,cut_through_ms,ratio");
            for r in rows {
                println!(
                    "{},{},{:.2},{:.2},{:.2},{:.2}",
                    r.object_bytes,
                    r.k,
                    r.fragment_bytes,
                    r.e2e_reassembly * 1e3,
                    r.e2e_cut_through * 1e3,
                    r.ratio
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Overhead { objects, mtu, sig_bytes, key_locator_bytes, header_bytes } => {
            println!("object_bytes,mtu,sig_bytes,segments,overhead_pct");
            for &object_bytes in &objects {
                for &mtu in &mtu {
                    for &sig_bytes in &sig_bytes {
                        let p = OverheadParams {
                            object_bytes,
                            mtu,
                            sig_bytes,
                            key_locator_bytes,
                            fixed_header_bytes: header_bytes,
                        };
                        let frac = segmentation_overhead(&p)?;
                        println!("{object_bytes},{mtu},{sig_bytes},{},{:.2}", p.segments()?, frac * 100.0);
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn frag_file_name(cf: &ContentFragment) -> String {
    format!("{}.{:010}.frag", cf.content_digest.to_hex(), cf.payload_offset)
}

fn write_fragments(frags: &[ContentFragment], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    println!("file,offset,size,state");
    for cf in frags {
        let file = frag_file_name(cf);
        let path = out_dir.join(&file);
        fs::write(&path, cf.encode()).with_context(|| format!("writing {}", path.display()))?;
        println!("{file},{},{},{}", cf.payload_offset, cf.payload.len(), hex::encode(cf.internal_state.serialize()));
    }
    Ok(())
}

fn cmd_fragment(
    input: &Path,
    name: Name,
    key: &Path,
    key_name: Option<Name>,
    mtu: usize,
    out_dir: &Path,
) -> Result<ExitCode> {
    let payload = read(input)?;
    let kp = KeyPair::from_file_bytes(&read(key)?).context("loading private key")?;
    let locator = match key_name {
        Some(n) => KeyLocator::KeyName(n),
        None => KeyLocator::Key(kp.public().clone()),
    };
    let co = ContentObject::sign(name, locator, payload, &kp);
    let frags = fragment_content(&co, mtu)?;
    write_fragments(&frags, out_dir)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_refragment(input: &Path, mtu: usize, out_dir: &Path) -> Result<ExitCode> {
    let cf = ContentFragment::decode(&read(input)?).with_context(|| format!("decoding {}", input.display()))?;
    let pieces = refragment(&cf, mtu)?;
    write_fragments(&pieces, out_dir)?;
    Ok(ExitCode::SUCCESS)
}

fn reject(msg: impl std::fmt::Display) -> Result<ExitCode> {
    println!("Reject: {msg}");
    Ok(ExitCode::from(1))
}

fn cmd_verify(dir: &Path, key: Option<&Path>, shuffle: Option<u64>, out: Option<&Path>) -> Result<ExitCode> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "frag"));
    files.sort();
    if files.is_empty() {
        bail!("no .frag files in {}", dir.display());
    }
    if let Some(seed) = shuffle {
        files.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut frags = Vec::with_capacity(files.len());
    for path in &files {
        let label = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match ContentFragment::decode(&read(path)?) {
            Ok(cf) => frags.push((label, cf)),
            Err(e) => return reject(format_args!("{label} is malformed: {e}")),
        }
    }

    let mut registry = KeyRegistry::new();
    let policy = match key {
        Some(path) => {
            let pk = PublicKey::from_file_bytes(&read(path)?).context("loading public key")?;
            for (_, cf) in &frags {
                match cf.trailer.as_ref().map(|t| &t.key_locator) {
                    Some(KeyLocator::KeyName(n)) => registry.insert(n.clone(), pk.clone()),
                    Some(KeyLocator::Key(k)) if *k != pk => return reject("content is signed with a different key"),
                    _ => {}
                }
            }
            SignaturePolicy::Require
        }
        None => SignaturePolicy::IfKeyAvailable,
    };

    let mut verifier = Verifier::new(policy, registry);
    let mut accepted = None;
    println!("file,offset,size,decision");
    for (label, cf) in &frags {
        let d = verifier.on_fragment(cf, SimTime::ZERO);
        println!("{label},{},{},{}", cf.payload_offset, cf.payload.len(), d.kind());
        match d {
            Decision::AcceptComplete { object, .. } => accepted = Some(object),
            Decision::Reject(r) => return reject(r),
            _ => {}
        }
    }
    let Some(object) = accepted else {
        let buffers: Vec<_> = verifier.buffers().collect();
        if buffers.len() > 1 {
            return reject("fragments belong to more than one content object");
        }
        return match buffers.first().map(|b| assemble(b)) {
            Some(Err(e)) => reject(e),
            _ => reject("content did not complete"),
        };
    };
    if verifier.len() > 1 {
        return reject("fragments belong to more than one content object");
    }
    println!("AcceptComplete {} {}", object.name(), object.digest().to_hex());
    if let Some(out) = out {
        fs::write(out, object.payload()).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_keygen(out: &Path, scheme: &str, seed: Option<u64>) -> Result<ExitCode> {
    let scheme = match scheme {
        "ed25519" => SchemeId::Ed25519,
        "test" => SchemeId::Test,
        s => bail!("unknown scheme {s:?}; expected ed25519 or test"),
    };
    let kp = match seed {
        Some(s) => KeyPair::generate(scheme, &mut ChaCha8Rng::seed_from_u64(s)),
        None => KeyPair::generate(scheme, &mut rand::rngs::OsRng),
    };
    let mut pub_path = out.as_os_str().to_owned();
    pub_path.push(".pub");
    fs::write(out, kp.to_file_bytes()).with_context(|| format!("writing {}", out.display()))?;
    fs::write(&pub_path, kp.public().to_file_bytes()).context("writing public key")?;
    println!("{}", hex::encode(kp.public().bytes()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    config: Option<&Path>,
    scenario: Option<&str>,
    seed: u64,
    trace: Option<&Path>,
    mode: Option<Mode>,
    flows: Option<u32>,
) -> Result<ExitCode> {
    let mut sc = match (config, scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            figoa_sim::parse_scenario(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => scenarios::by_name(name, mode.unwrap_or(Mode::CutThrough))
            .ok_or_else(|| anyhow!("unknown scenario {name:?}; known: {}", scenarios::NAMES.join(", ")))?,
        (None, None) => bail!("either --config or --scenario is required"),
    };
    if let Some(mode) = mode {
        sc.topology.nodes.iter_mut().for_each(|n| n.mode = mode);
    }
    if let Some(f) = flows {
        sc.topology.links.iter_mut().for_each(|l| l.flows = f);
    }
    let res = figoa_sim::run(&sc, seed)?;
    if let Some(path) = trace {
        fs::write(path, res.trace.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let ms = |t: Option<SimTime>| t.map(|t| format!("{:.2}", t.as_millis_f64())).unwrap_or_default();
    println!("node,name,requested_ms,served_ms,completed_ms,latency_ms,outcome");
    for c in &res.completions {
        let outcome = match &c.outcome {
            ConsumerOutcome::Accepted => "accept".to_string(),
            ConsumerOutcome::Rejected { node } => format!("reject@{node}"),
            ConsumerOutcome::TimedOut => "timeout".to_string(),
        };
        let latency = c.content_latency().map(|d| format!("{:.2}", d.as_millis_f64())).unwrap_or_default();
        println!(
            "{},{},{},{},{},{latency},{outcome}",
            c.node,
            c.name,
            ms(Some(c.requested_at)),
            ms(c.served_at),
            ms(c.completed_at)
        );
    }
    Ok(ExitCode::SUCCESS)
}

type Row = (&'static str, fn(&figoa_sim::model::LatencyReport) -> f64);

fn cmd_latency_table(flows: &[u32], hops: usize, latency: f64, bw: f64, frag_size: f64, k: u32) -> Result<ExitCode> {
    let reports = flows
        .iter()
        .map(|&f| latency_model(&LatencyParams::uniform(hops, latency * 1e-3, bw * 1e6, frag_size, k, f)))
        .collect::<Result<Vec<_>, _>>()?;
    let header: Vec<String> = flows.iter().map(u32::to_string).collect();
    println!("metric,{}", header.join(","));
    let rows: [Row; 5] = [
        ("inter_fragment_gap_ms", |r| r.inter_fragment_gap * 1e3),
        ("first_to_last_gap_ms", |r| r.first_to_last_gap * 1e3),
        ("e2e_reassembly_ms", |r| r.e2e_reassembly * 1e3),
        ("e2e_cut_through_ms", |r| r.e2e_cut_through * 1e3),
        ("reassembly_slowdown_pct", |r| r.slowdown_pct),
    ];
    for (label, f) in rows {
        let cells: Vec<String> = reports.iter().map(|r| format!("{:.2}", f(r))).collect();
        println!("{label},{}", cells.join(","));
    }
    Ok(ExitCode::SUCCESS)
}
