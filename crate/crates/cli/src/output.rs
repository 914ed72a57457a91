use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Result of one subcommand before it is written anywhere.
pub struct Artifacts {
    pub csv: Option<String>,
    pub result: Value,
    /// `None` for commands that only measure.
    pub pass: Option<bool>,
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config: &'a C,
    pass: Option<bool>,
    result: &'a Value,
}

pub fn report_json<C: Serialize>(config: &C, art: &Artifacts) -> String {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: "folner-lab",
        version: env!("CARGO_PKG_VERSION"),
        config,
        pass: art.pass,
        result: &art.result,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    text
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// With an output directory both artifacts are written there. Otherwise the
/// CSV goes to stdout when there is one, and the JSON report when not.
pub fn emit<C: Serialize>(name: &str, out: Option<&Path>, config: &C, art: &Artifacts) -> io::Result<()> {
    let json = report_json(config, art);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            if let Some(csv) = &art.csv {
                write_atomic(&dir.join(format!("{name}.csv")), csv)?;
            }
            write_atomic(&dir.join(format!("{name}.json")), &json)
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(art.csv.as_deref().unwrap_or(&json).as_bytes())?;
            stdout.flush()
        }
    }
}
