//! `disco list`: acquisition functions, models and which pairs are allowed.

use std::fmt::Write as _;

use disco_core::{compatibility, AcquisitionKind, ModelKind};

pub fn cmd_list() -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<16}", "acquisition");
    for m in ModelKind::ALL {
        let _ = write!(out, "{:<16}", m.name());
    }
    out.truncate(out.trim_end().len());
    out.push('\n');
    for a in AcquisitionKind::ALL {
        let _ = write!(out, "{:<16}", a.name());
        for m in ModelKind::ALL {
            let _ = write!(out, "{:<16}", if compatibility(m, a) { "yes" } else { "-" });
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    out.push('\n');
    let _ = writeln!(out, "{:<16}allowed acquisitions", "model");
    for m in ModelKind::ALL {
        let allowed: Vec<&str> = AcquisitionKind::ALL
            .into_iter()
            .filter(|&a| compatibility(m, a))
            .map(AcquisitionKind::name)
            .collect();
        let _ = writeln!(out, "{:<16}{}", m.name(), allowed.join(", "));
    }
    out
}
