//! Output directory bookkeeping. Every data file goes through `Outputs` so
//! a failed run can delete what it already wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use qcave::format::fmt_str;

pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    started: Instant,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        if created_dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self { dir: dir.to_owned(), created_dir, files: Vec::new(), started: Instant::now() })
    }

    /// Create `name` in the output directory and write it with `f`.
    pub fn write<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Remove everything this run wrote, and the directory if we made it.
    pub fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }

    /// Write the `<command>.meta.toml` sidecar. Run-specific values such as
    /// the wall clock live only here, so data files stay byte-identical
    /// between runs.
    pub fn finish(&mut self, command: &str, scenario_toml: &str) -> Result<()> {
        let names: Vec<String> = self
            .files
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| fmt_str(&n.to_string_lossy()))
            .collect();
        let args: Vec<String> = std::env::args().skip(1).map(|a| fmt_str(&a)).collect();
        let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let elapsed = self.started.elapsed().as_secs_f64();
        let meta = format!("{command}.meta.toml");
        self.write(&meta, |w| {
            writeln!(w, "command = {}", fmt_str(command))?;
            writeln!(w, "version = {}", fmt_str(env!("CARGO_PKG_VERSION")))?;
            writeln!(w, "args = [{}]", args.join(", "))?;
            writeln!(w, "files = [{}]", names.join(", "))?;
            writeln!(w, "unix_time = {unix_time}")?;
            writeln!(w, "elapsed_s = {elapsed:.3}")?;
            writeln!(w, "scenario = {}", fmt_str(scenario_toml))?;
            Ok(())
        })
    }
}
