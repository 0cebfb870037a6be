//! Static resource-leak analysis.
//!
//! A leak is reported at a program point where (i) the resource may still
//! be open, (ii) it is reachable through a local variable, and (iii) on
//! all paths from that point to an exit, normal or exceptional, no local
//! referencing it is mentioned again.

mod cfg;
mod detect;
mod liveness;

pub use cfg::{build_cfg, Cfg};
pub use detect::detect_leaks;
pub use liveness::{compute_liveness, mentions, Liveness, Name};

use crate::ir::{IrPoint, Program};
use std::collections::BTreeSet;
use std::error::Error;
use std::fmt;

/// Which classes are resources, which of those are wrappers that adopt the
/// resource passed to their constructor, and the name of the close method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceConfig {
    resource_classes: BTreeSet<String>,
    wrapper_classes: BTreeSet<String>,
    close_method: String,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        let mut config = ResourceConfig {
            resource_classes: BTreeSet::new(),
            wrapper_classes: BTreeSet::new(),
            close_method: "close".to_string(),
        };
        for class in [
            "java::io::FileOutputStream",
            "java::io::FileInputStream",
            "java::io::ObjectInputStream",
            "java::util::zip::ZipOutputStream",
        ] {
            config.add_resource(class);
        }
        config.add_wrapper("java::io::BufferedInputStream");
        config
    }
}

impl ResourceConfig {
    pub fn empty() -> Self {
        ResourceConfig {
            resource_classes: BTreeSet::new(),
            wrapper_classes: BTreeSet::new(),
            close_method: "close".to_string(),
        }
    }

    pub fn add_resource(&mut self, class: impl Into<String>) {
        self.resource_classes.insert(class.into());
    }

    /// Wrapper classes are resources as well.
    pub fn add_wrapper(&mut self, class: impl Into<String>) {
        let class = class.into();
        self.resource_classes.insert(class.clone());
        self.wrapper_classes.insert(class);
    }

    pub fn is_resource(&self, class: &str) -> bool {
        self.resource_classes.contains(class)
    }

    pub fn is_wrapper(&self, class: &str) -> bool {
        self.wrapper_classes.contains(class)
    }

    pub fn close_method(&self) -> &str {
        &self.close_method
    }

    pub fn resource_classes(&self) -> impl Iterator<Item = &str> {
        self.resource_classes.iter().map(|s| s.as_str())
    }

    /// Parse the plain-text config format: one directive per line, among
    /// `resource <class>`, `wrapper <class>`, `close_method <name>`.
    /// Blank lines are ignored.
    pub fn from_directives(text: &str) -> Result<Self, ConfigError> {
        let mut config = ResourceConfig::empty();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (directive, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| ConfigError::new(lineno + 1, "missing argument"))?;
            let arg = rest.trim();
            if arg.is_empty() || arg.contains(char::is_whitespace) {
                return Err(ConfigError::new(lineno + 1, "expected a single argument"));
            }
            match directive {
                "resource" => config.add_resource(arg),
                "wrapper" => config.add_wrapper(arg),
                "close_method" => config.close_method = arg.to_string(),
                other => {
                    return Err(ConfigError::new(
                        lineno + 1,
                        format!("unknown directive `{other}`"),
                    ))
                }
            }
        }
        if config.close_method.is_empty() {
            return Err(ConfigError::new(0, "close_method must be nonempty"));
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl Error for ConfigError {}

/// One detected leak: the allocation site, the local that still reaches it,
/// and the last-use point the close should follow.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LeakReport {
    pub proc: String,
    /// Allocation instruction of the leaking resource.
    pub site: IrPoint,
    /// Local variable satisfying the reachability condition.
    pub var: String,
    /// Final mention of the resource on the leaking paths.
    pub last_use: IrPoint,
    /// First handler of the last-use block, when it has one.
    pub handler_of_last_use: Option<String>,
}

impl fmt::Display for LeakReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: resource allocated at {} leaks via `{}`, last use at {}",
            self.proc, self.site, self.var, self.last_use
        )?;
        if let Some(h) = &self.handler_of_last_use {
            write!(f, " (handler {h})")?;
        }
        Ok(())
    }
}

/// Run the detector over every procedure of a program.
pub fn analyze_program(program: &Program, config: &ResourceConfig) -> Vec<LeakReport> {
    let mut reports = Vec::new();
    for proc in &program.procedures {
        let cfg = build_cfg(proc);
        reports.extend(detect_leaks(proc, &cfg, config));
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_has_wrapper_subset() {
        let c = ResourceConfig::default();
        assert!(c.is_resource("java::io::FileOutputStream"));
        assert!(c.is_resource("java::io::BufferedInputStream"));
        assert!(c.is_wrapper("java::io::BufferedInputStream"));
        assert!(!c.is_wrapper("java::io::FileOutputStream"));
        assert_eq!(c.close_method(), "close");
    }

    #[test]
    fn directives_round_trip() {
        let text = "resource a::B\nwrapper c::D\nclose_method shut\n\n";
        let c = ResourceConfig::from_directives(text).unwrap();
        assert!(c.is_resource("a::B"));
        assert!(c.is_resource("c::D"));
        assert!(c.is_wrapper("c::D"));
        assert_eq!(c.close_method(), "shut");
    }

    #[test]
    fn unknown_directive_rejected() {
        assert!(ResourceConfig::from_directives("open a::B\n").is_err());
    }
}
