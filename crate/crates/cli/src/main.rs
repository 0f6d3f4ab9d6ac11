//! `periodica` command-line tool.

mod args;
mod failure;
mod manifest;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::{Cli, Command};
use failure::Failure;
use manifest::{Manifest, OutputDigest, MANIFEST_FILE};

fn write_outputs(dir: &Path, outputs: &run::Outputs) -> Result<Vec<OutputDigest>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::internal(format!("{}: {e}", dir.display())))?;
    outputs
        .iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
            Ok(OutputDigest {
                file: name.clone(),
                sha256: manifest::sha256_hex(bytes),
            })
        })
        .collect()
}

fn run_and_record(
    command: Command,
    input: Option<PathBuf>,
    out: &Path,
    threads: usize,
) -> Result<Manifest, Failure> {
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let input_sha256 = match &input {
        Some(p) => Some(manifest::sha256_hex(&run::read_input(p)?.1)),
        None => None,
    };
    let outputs = run::execute(&command, input.as_deref())?;
    let digests = write_outputs(out, &outputs)?;
    let m = Manifest {
        tool: "periodica".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        seed: command.seed(),
        input: command.input().cloned(),
        config: command,
        input_sha256,
        outputs: digests,
        threads,
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let mut bytes = serde_json::to_vec_pretty(&m)?;
    bytes.push(b'\n');
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, bytes).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    Ok(m)
}

fn rerun(manifest_path: &Path, out: &Path, threads: usize) -> Result<(), Failure> {
    let old = manifest::load(manifest_path)?;
    let input = old.input.as_deref().map(|p| manifest::locate_input(p, manifest_path));
    if let (Some(path), Some(expected)) = (&input, &old.input_sha256) {
        let found = manifest::sha256_hex(&run::read_input(path)?.1);
        if &found != expected {
            return Err(Failure::input(format!(
                "{}: input changed since the manifest was written (sha256 {found}, expected {expected})",
                path.display()
            )));
        }
    }
    let new = run_and_record(old.config, input, out, threads)?;
    let mismatched: Vec<&str> = old
        .outputs
        .iter()
        .filter(|o| !new.outputs.contains(o))
        .map(|o| o.file.as_str())
        .collect();
    if mismatched.is_empty() {
        println!("all {} outputs reproduced identically", old.outputs.len());
        Ok(())
    } else {
        Err(Failure::internal(format!(
            "outputs differ from the manifest: {}",
            mismatched.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(failure::EXIT_INPUT as u8);
        }
        builder = builder.num_threads(k);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: could not start worker threads: {e}");
            return ExitCode::from(failure::EXIT_INTERNAL as u8);
        }
    };
    let threads = pool.current_num_threads();
    let result = pool.install(|| match cli.command {
        Command::Rerun(r) => rerun(&r.manifest, &cli.out, threads),
        mut command => {
            command.resolve();
            let input = command.input().cloned();
            run_and_record(command, input, &cli.out, threads).map(|_| ())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
