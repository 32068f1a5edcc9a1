//! The `streetgen` command line.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use parking_lot::RwLock;
use serde_json::json;
use thiserror::Error;

use streetgen::engine::{
    build, generate, partition_axes, run_workers, sync, ChangeReport, EngineError, GenerateOptions, ObjectDef,
    SemaphoreLedger, StreetModelStore,
};
use streetgen::network::{build_topology, NetworkError};
use streetgen::settings::SettingsError;
use streetgen::traffic::detect_roundabouts;
use streetgen::{synth, Diagnostic, EdgeId, Settings, Topology};

use crate::io::{export_geojson, export_traffic_xml, load_network, write_network, DataError, Layer};

/// Exit status: everything built cleanly.
pub const EXIT_OK: i32 = 0;
/// Exit status: output written, but some inputs produced diagnostics.
pub const EXIT_DIAGNOSTICS: i32 = 1;
/// Exit status: nothing usable was produced.
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, Error)]
enum Fatal {
    #[error(transparent)]
    Settings(#[from] SettingsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "streetgen", version, about = "Street surfaces and traffic lanes from road centerlines")]
struct Cli {
    /// Settings file (`key = value` lines); falls back to $STREETGEN_SETTINGS.
    #[arg(long, global = true)]
    settings: Option<PathBuf>,
    /// Persisted model used by `update` and `export`.
    #[arg(long, global = true, default_value = "streetgen-state.json")]
    state: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Geojson,
    TrafficXml,
}

#[derive(Debug, Clone, Copy)]
struct GridSize(usize, usize);

impl FromStr for GridSize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|n| *n >= 2).ok_or_else(|| format!("grid side `{v}` must be an integer >= 2"));
        Ok(GridSize(parse(w)?, parse(h)?))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the street model from a GeoJSON road network.
    Build {
        net: PathBuf,
        /// Only (re)generate these axis or edge ids, on top of the stored state.
        #[arg(long, value_delimiter = ',')]
        scope: Vec<String>,
        /// Write every GeoJSON layer and traffic.xml into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of workers over k-means partitions of the axes.
        #[arg(long)]
        parallel: Option<usize>,
        /// JSON list of street object definitions to place.
        #[arg(long)]
        objects: Option<PathBuf>,
        #[arg(long)]
        no_roundabouts: bool,
    },
    /// Regenerate only what changed in the network since the stored state.
    Update {
        net: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the stored model.
    Export {
        #[arg(long, value_enum, default_value_t = Format::Geojson)]
        format: Format,
        #[arg(long, value_delimiter = ',')]
        layers: Vec<Layer>,
        /// Directory for GeoJSON, file for traffic XML.
        #[arg(long)]
        out: PathBuf,
    },
    /// List roundabout candidates of a network as JSON.
    DetectRoundabouts { net: PathBuf },
    /// Split the axes into k spatial clusters and print them as JSON.
    Partition {
        net: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time builds of a synthetic grid.
    Bench {
        #[arg(long)]
        grid: GridSize,
        #[arg(long, default_value_t = 50.0)]
        spacing: f64,
        #[arg(long)]
        parallel: Option<usize>,
        /// Also time one generation per edge.
        #[arg(long)]
        compare_loop: bool,
        /// Save the generated network as GeoJSON.
        #[arg(long)]
        write_net: Option<PathBuf>,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    diagnostics: Vec<Diagnostic>,
}

impl Io<'_> {
    fn warn(&mut self, d: &Diagnostic) {
        let _ = writeln!(self.err, "warning: {d}");
    }

    fn status(&mut self) -> i32 {
        for d in &self.diagnostics {
            let _ = writeln!(self.err, "diagnostic: {d}");
        }
        if self.diagnostics.is_empty() {
            EXIT_OK
        } else {
            EXIT_DIAGNOSTICS
        }
    }
}

/// Run the command line with `args` (program name first) and return the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_FATAL
                }
            };
        }
    };
    let mut io = Io { out, err, diagnostics: Vec::new() };
    match dispatch(cli, &mut io) {
        Ok(()) => io.status(),
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            EXIT_FATAL
        }
    }
}

fn load_topology(net: &Path, settings: &Settings, io: &mut Io<'_>) -> Result<Topology, Fatal> {
    let loaded = load_network(net, settings)?;
    for w in &loaded.warnings {
        io.warn(w);
    }
    io.diagnostics.extend(loaded.rejected);
    let topo = build_topology(&loaded.axes, settings.snap_tol)?;
    io.diagnostics.extend(topo.diagnostics.iter().cloned());
    Ok(topo)
}

fn summarize(store: &StreetModelStore, report: &ChangeReport, io: &mut Io<'_>) {
    let _ = writeln!(
        io.out,
        "{} sections, {} intersections, {} blocks, {} lanes, {} interconnections, {} roundabouts ({} inserted, {} updated, {} deleted)",
        store.sections().count(),
        store.intersections().count(),
        store.blocks().count(),
        store.lanes().count(),
        store.interconnections().count(),
        store.roundabouts().count(),
        report.inserted.len(),
        report.updated.len(),
        report.deleted.len(),
    );
}

fn write_outputs(store: &StreetModelStore, settings: &Settings, dir: &Path, io: &mut Io<'_>) -> Result<(), Fatal> {
    export_geojson(store, dir, &Layer::ALL)?;
    match export_traffic_xml(store, settings, &dir.join("traffic.xml")) {
        Ok(()) => Ok(()),
        Err(DataError::MissingLanes(e)) => {
            io.diagnostics.push(Diagnostic::new(e.as_str(), "no lanes, traffic export skipped"));
            Ok(())
        }
        Err(other) => Err(other.into()),
    }
}

fn scope_edges(topo: &Topology, ids: &[String]) -> Result<BTreeSet<EdgeId>, Fatal> {
    let mut scope = BTreeSet::new();
    for id in ids {
        if let Some(edges) = topo.axis_edges.get(&id.as_str().into()) {
            scope.extend(edges.iter().cloned());
        } else if topo.edges.contains_key(&EdgeId::from(id.as_str())) {
            scope.insert(EdgeId::from(id.as_str()));
        } else {
            return Err(Fatal::Usage(format!("--scope: no axis or edge `{id}`")));
        }
    }
    Ok(scope)
}

fn parallel_build(store: StreetModelStore, topo: &Topology, settings: &Settings, workers: usize) -> Result<(StreetModelStore, ChangeReport), Fatal> {
    let parts = partition_axes(topo, workers.min(topo.axes.len()).max(1), settings.partition_seed, settings.partition_max_iter)?;
    let shared = RwLock::new(store);
    let ledger = SemaphoreLedger::new();
    let stats = run_workers(&shared, &ledger, topo, settings, &parts, usize::MAX, 0)?;
    Ok((shared.into_inner(), stats.report))
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Result<(), Fatal> {
    let settings = Settings::resolve(cli.settings.as_deref())?;
    match cli.command {
        Command::Build { net, scope, out, parallel, objects, no_roundabouts } => {
            let topo = load_topology(&net, &settings, io)?;
            let opts = GenerateOptions { roundabouts: !no_roundabouts, ..GenerateOptions::default() };
            let mut store = if !scope.is_empty() && cli.state.exists() {
                StreetModelStore::load(&cli.state)?
            } else {
                StreetModelStore::new()
            };
            if let Some(path) = objects {
                let text = std::fs::read_to_string(&path).map_err(EngineError::Io)?;
                let defs: Vec<ObjectDef> = serde_json::from_str(&text).map_err(EngineError::Json)?;
                defs.into_iter().for_each(|d| store.add_object(d));
            }
            let report = if !scope.is_empty() {
                generate(&mut store, &topo, &scope_edges(&topo, &scope)?, &settings, opts)?
            } else if let Some(n) = parallel.filter(|&n| n > 1) {
                let (built, report) = parallel_build(store, &topo, &settings, n)?;
                store = built;
                report
            } else {
                build(&mut store, &topo, &settings, opts)?
            };
            io.diagnostics.extend(report.diagnostics.iter().cloned());
            store.save(&cli.state)?;
            if let Some(dir) = out {
                write_outputs(&store, &settings, &dir, io)?;
            }
            summarize(&store, &report, io);
        }
        Command::Update { net, out } => {
            if !cli.state.exists() {
                return Err(Fatal::Usage(format!("no state file at {}, run `build` first", cli.state.display())));
            }
            let mut store = StreetModelStore::load(&cli.state)?;
            let topo = load_topology(&net, &settings, io)?;
            let report = sync(&mut store, &topo, &settings, GenerateOptions::default())?;
            io.diagnostics.extend(report.diagnostics.iter().cloned());
            store.save(&cli.state)?;
            if let Some(dir) = out {
                write_outputs(&store, &settings, &dir, io)?;
            }
            summarize(&store, &report, io);
        }
        Command::Export { format, layers, out } => {
            let store = StreetModelStore::load(&cli.state)?;
            match format {
                Format::Geojson => {
                    let layers = if layers.is_empty() { Layer::ALL.to_vec() } else { layers };
                    for p in export_geojson(&store, &out, &layers)? {
                        let _ = writeln!(io.out, "{}", p.display());
                    }
                }
                Format::TrafficXml => {
                    export_traffic_xml(&store, &settings, &out)?;
                    let _ = writeln!(io.out, "{}", out.display());
                }
            }
        }
        Command::DetectRoundabouts { net } => {
            let topo = load_topology(&net, &settings, io)?;
            let found = detect_roundabouts(&topo, &settings);
            let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&found).map_err(EngineError::Json)?);
        }
        Command::Partition { net, k, seed } => {
            let topo = load_topology(&net, &settings, io)?;
            let parts = partition_axes(&topo, k, seed.unwrap_or(settings.partition_seed), settings.partition_max_iter)?;
            let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&parts).map_err(EngineError::Json)?);
        }
        Command::Bench { grid, spacing, parallel, compare_loop, write_net } => {
            let axes = synth::grid(grid.0, grid.1, spacing);
            if let Some(p) = write_net {
                write_network(&axes, &p)?;
            }
            let t = Instant::now();
            let topo = build_topology(&axes, settings.snap_tol)?;
            let topology_ms = t.elapsed().as_secs_f64() * 1e3;
            let t = Instant::now();
            let mut store = StreetModelStore::new();
            let report = build(&mut store, &topo, &settings, GenerateOptions::default())?;
            let build_ms = t.elapsed().as_secs_f64() * 1e3;
            io.diagnostics.extend(report.diagnostics.iter().cloned());
            let mut result = json!({
                "grid": format!("{}x{}", grid.0, grid.1),
                "edges": topo.edges.len(),
                "topology_ms": topology_ms,
                "build_ms": build_ms,
                "junction_solves": report.junction_solves,
            });
            if let Some(n) = parallel.filter(|&n| n > 1) {
                let t = Instant::now();
                let (built, _) = parallel_build(StreetModelStore::new(), &topo, &settings, n)?;
                result["parallel_ms"] = json!(t.elapsed().as_secs_f64() * 1e3);
                result["workers"] = json!(n);
                result["parallel_matches"] = json!(built.fingerprint() == store.fingerprint());
            }
            if compare_loop {
                let opts = GenerateOptions { roundabouts: false, ..GenerateOptions::default() };
                let t = Instant::now();
                let mut looped = StreetModelStore::new();
                let mut solves = 0;
                for e in topo.edges.keys() {
                    solves += generate(&mut looped, &topo, &BTreeSet::from([e.clone()]), &settings, opts)?.junction_solves;
                }
                result["loop_ms"] = json!(t.elapsed().as_secs_f64() * 1e3);
                result["loop_junction_solves"] = json!(solves);
            }
            let _ = writeln!(io.out, "{result}");
        }
    }
    Ok(())
}
