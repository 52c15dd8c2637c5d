//! CSV rendering and output-target resolution.
//!
//! Data cells are deterministic: floats carry 17 significant digits with a
//! `.` decimal separator, and repeated runs with the same configuration
//! produce byte-identical data. Wall-clock timing, which cannot be
//! deterministic, goes into a trailing `# runtime_secs=` comment instead of
//! a data cell.

use std::io::Write;
use std::path::{Path, PathBuf};

/// 17 significant digits, scientific, locale-independent.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV report: config echo comment, header, rows, trailing comments.
pub struct Report {
    config_echo: Vec<(String, String)>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl Report {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            config_echo: Vec::new(),
            header,
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl std::fmt::Display) {
        self.config_echo.push((key.to_string(), value.to_string()));
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn footer(&mut self, key: &str, value: impl std::fmt::Display) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let echo = self
            .config_echo
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("# config: {echo}\n"));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out
    }
}

/// Resolves where the report goes: an explicit `--output` path, else
/// `$GEXPECT_OUT_DIR/<subcommand>.csv` when that variable is set, else
/// standard output. Returns the path written, if any.
pub fn write_report(
    text: &str,
    output: Option<&Path>,
    subcommand: &str,
) -> std::io::Result<Option<PathBuf>> {
    let target: Option<PathBuf> = match output {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os("GEXPECT_OUT_DIR")
            .map(|dir| PathBuf::from(dir).join(format!("{subcommand}.csv"))),
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_with_echo_and_footer() {
        let mut r = Report::new(vec!["a", "b"]);
        r.echo("subcommand", "pde");
        r.echo("t", 1.0);
        r.row(vec![fmt_f(1.0), "201".to_string()]);
        r.footer("runtime_secs", "0.123");
        let text = r.render();
        assert!(text.starts_with("# config: subcommand=pde t=1\n"));
        assert!(text.contains("a,b\n"));
        assert!(text.contains("1.0000000000000000e0,201\n"));
        assert!(text.ends_with("# runtime_secs=0.123\n"));
    }

    #[test]
    fn float_formatting_is_17_significant_digits() {
        assert_eq!(fmt_f(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f(1.0), "1.0000000000000000e0");
    }
}
