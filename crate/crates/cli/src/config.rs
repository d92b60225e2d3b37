use std::path::Path;

use serde::Deserialize;

pub const CONFIG_ENV: &str = "TRACENORM_CONFIG";

/// Defaults read from a TOML file. Flags given on the command line win.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub field: FieldDefaults,
    pub workers: Option<usize>,
    pub census_cap: Option<u64>,
    pub dlog_cap: Option<u64>,
    pub factor_budget: Option<u64>,
    pub mode: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDefaults {
    pub p: Option<u64>,
    pub e: Option<u32>,
    pub m: Option<u32>,
    pub modulus: Option<Vec<u64>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, String> {
        let env_path = std::env::var_os(CONFIG_ENV);
        let path = match path.map(Path::to_path_buf).or(env_path.map(Into::into)) {
            Some(p) => p,
            None => return Ok(Config::default()),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
