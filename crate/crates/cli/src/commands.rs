use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};

use isexplore_core::synth::{run_ablation, write_ablation_csv};
use isexplore_core::track::{load_meta, save_meta, TrackMeta};
use isexplore_core::{
    generate_tracks, load_track, report_to_json, run_strategy, save_track, AudioFeatureTrack, LandmarkTrack, Plant,
    SelectionReport, StrategyKind, SynthSpec, Timings, Track,
};
use serde::Serialize;

use crate::args::{AblateArgs, InspectArgs, ScoringFlags, SelectArgs, SynthArgs};
use crate::error::CliError;

/// What to cut: written next to the report so a media tool can trim the
/// source without re-reading the report.
#[derive(Debug, Serialize)]
struct CutManifest {
    source_media: Option<String>,
    start_s: f64,
    end_s: f64,
    fps: f64,
    report_path: String,
}

fn load_pair(audio: &Path, landmarks: &Path) -> Result<(AudioFeatureTrack, LandmarkTrack), CliError> {
    let a = load_track(audio)
        .and_then(Track::into_audio)
        .map_err(CliError::track(audio))?;
    let l = load_track(landmarks)
        .and_then(Track::into_landmarks)
        .map_err(CliError::track(landmarks))?;
    Ok((a, l))
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when
/// `threads` is unset or zero.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None | Some(0) => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(CliError::output(path))
}

fn log_timings(t: &Timings) {
    eprintln!(
        "timing: candidates {:.1} ms, diversity {:.1} ms, spectral {:.1} ms, total {:.1} ms",
        t.candidates_ms, t.diversity_ms, t.spectral_ms, t.total_ms
    );
}

fn check_scoring(flags: &ScoringFlags) -> Result<(), CliError> {
    let cfg = flags.config(StrategyKind::IsExplore, 0);
    if !(cfg.segment_len_s.is_finite() && cfg.segment_len_s > 0.0) {
        return Err(CliError::Usage(format!("--segment-len must be positive, got {}", cfg.segment_len_s)));
    }
    if !(cfg.stride_s.is_finite() && cfg.stride_s > 0.0) {
        return Err(CliError::Usage(format!("--stride must be positive, got {}", cfg.stride_s)));
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))
}

pub fn select(args: &SelectArgs) -> Result<(), CliError> {
    check_scoring(&args.scoring)?;
    let (audio, landmarks) = load_pair(&args.audio, &args.landmarks)?;
    let cfg = args.scoring.config(args.strategy, args.seed);
    let mut report: SelectionReport =
        with_threads(args.scoring.threads, || run_strategy(&audio, &landmarks, &cfg))??;
    if let Some(t) = &report.timings {
        log_timings(t);
    }
    if !args.timings {
        report.timings = None;
    }
    write_text(&args.out, &report_to_json(&report))?;

    let manifest = CutManifest {
        source_media: load_meta(&args.audio).and_then(|m| m.source),
        start_s: report.chosen.start_s,
        end_s: report.chosen.end_s,
        fps: audio.fps(),
        report_path: args.out.display().to_string(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    write_text(&args.manifest, &(json + "\n"))?;
    println!("{:.3} {:.3}", report.chosen.start_s, report.chosen.end_s);
    Ok(())
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>, CliError> {
    let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::Usage("--strategies must name at least one strategy".into()));
    }
    names
        .into_iter()
        .map(|n| n.parse().map_err(CliError::Usage))
        .collect()
}

pub fn ablate(args: &AblateArgs) -> Result<(), CliError> {
    let strategies = parse_strategies(&args.strategies)?;
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let Some(last) = args.seed.checked_add(args.seeds - 1) else {
        return Err(CliError::Usage("seed range overflows u64".into()));
    };
    check_scoring(&args.scoring)?;
    let (audio, landmarks) = load_pair(&args.audio, &args.landmarks)?;
    let seeds: Vec<u64> = (args.seed..=last).collect();
    let plant = args.plant_start.map(|start_s| Plant {
        start_s,
        len_s: args.plant_len,
    });
    let base = args.scoring.config(StrategyKind::IsExplore, args.seed);
    let rows = with_threads(args.scoring.threads, || {
        run_ablation(&audio, &landmarks, &base, &strategies, &seeds, plant)
    })??;

    let file = File::create(&args.out).map_err(CliError::output(&args.out))?;
    write_ablation_csv(&rows, BufWriter::new(file)).map_err(CliError::output(&args.out))?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn synth_paths(out_dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        out_dir.join(format!("{name}.audio.ftrk")),
        out_dir.join(format!("{name}.landmarks.ftrk")),
    )
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.spec.display())))?;
    let spec: SynthSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.spec.display())))?;
    let name = match &args.name {
        Some(n) => n.clone(),
        None => args
            .spec
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synth".into()),
    };
    let (audio, landmarks) = generate_tracks(&spec)?;

    fs::create_dir_all(&args.out_dir).map_err(CliError::output(&args.out_dir))?;
    let (audio_path, lm_path) = synth_paths(&args.out_dir, &name);
    let created_utc = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string();
    for (track, path) in [(Track::Audio(audio), &audio_path), (Track::Landmarks(landmarks), &lm_path)] {
        save_track(&track, path).map_err(CliError::track(path))?;
        let meta = TrackMeta {
            source: None,
            extractor: format!("isexplore synth (seed {})", spec.seed),
            created_utc: created_utc.clone(),
        };
        save_meta(&meta, path).map_err(CliError::track(path))?;
        println!("{}", path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ColumnStats {
    name: String,
    min: f64,
    max: f64,
    mean: f64,
}

#[derive(Debug, Serialize)]
struct Inspection {
    path: String,
    kind: &'static str,
    version: u16,
    fps: f64,
    frame_count: u64,
    dim: u64,
    duration_s: f64,
    columns: Vec<ColumnStats>,
}

fn column_stats(data: &[f32], names: Vec<String>) -> Vec<ColumnStats> {
    let width = names.len();
    let frames = data.len() / width;
    names
        .into_iter()
        .enumerate()
        .map(|(c, name)| {
            let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for row in data.chunks_exact(width) {
                let v = f64::from(row[c]);
                min = min.min(v);
                max = max.max(v);
                sum += v;
            }
            ColumnStats {
                name,
                min,
                max,
                mean: sum / frames as f64,
            }
        })
        .collect()
}

pub fn inspect(args: &InspectArgs) -> Result<(), CliError> {
    let track = load_track(&args.track).map_err(CliError::track(&args.track))?;
    let header = *track.header();
    let (kind, names) = match &track {
        Track::Audio(a) => ("audio", (0..a.dim()).map(|i| format!("f{i}")).collect()),
        Track::Landmarks(l) => (
            "landmarks",
            (0..l.points())
                .flat_map(|p| [format!("p{p}.x"), format!("p{p}.y")])
                .collect(),
        ),
    };
    let out = Inspection {
        path: args.track.display().to_string(),
        kind,
        version: header.version,
        fps: header.fps,
        frame_count: header.frame_count,
        dim: header.dim,
        duration_s: header.duration_s(),
        columns: column_stats(track.payload(), names),
    };
    let json = serde_json::to_string_pretty(&out).expect("inspection serialization");
    match writeln!(std::io::stdout().lock(), "{json}") {
        // A closed pipe (e.g. `| head`) is not a failure of ours.
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::output(Path::new("<stdout>"))(e)),
        _ => Ok(()),
    }
}
