//! Prints both network presets and checks every architecture clause.

use nbad::model::{NetworkSpec, Preset};

fn main() -> nbad::Result<()> {
    for preset in [Preset::Canonical, Preset::Desk] {
        let spec = NetworkSpec::from_preset(preset);
        println!(
            "== {} ({} parameters)",
            format!("{preset:?}").to_lowercase(),
            spec.parameter_count()?
        );
        print!("{}", spec.summary()?);
        for (clause, verdict) in spec.clause_report() {
            println!(
                "  {:28} {}",
                clause.name(),
                if verdict.is_ok() { "ok" } else { "violated" }
            );
        }
    }
    Ok(())
}
