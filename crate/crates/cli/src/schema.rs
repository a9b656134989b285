//! JSON schema of every subcommand's stdout document.

/// Schema text; definitions are keyed by subcommand.
pub const OUTPUT_SCHEMA: &str = include_str!("../schema/output.schema.json");

/// Definition name for a subcommand's output.
pub fn definition_for(subcommand: &str) -> Option<&'static str> {
    Some(match subcommand {
        "ground" => "ground",
        "compile" => "compile",
        "analyze" => "analysis",
        "analyze-dir" => "analysis-list",
        "gen" => "manifest",
        "validate" => "validation",
        _ => return None,
    })
}
