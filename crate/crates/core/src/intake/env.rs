use std::collections::BTreeMap;
use std::path::PathBuf;

/// Read access to environment variables, injectable for tests.
pub trait Env: Send + Sync {
    fn var(&self, name: &str) -> Option<String>;

    fn home_dir(&self) -> Option<PathBuf> {
        self.var("HOME").or_else(|| self.var("USERPROFILE")).filter(|h| !h.is_empty()).map(PathBuf::from)
    }
}

/// The process environment.
#[derive(Clone, Copy, Debug, Default)]
pub struct SystemEnv;

impl Env for SystemEnv {
    fn var(&self, name: &str) -> Option<String> {
        std::env::var(name).ok()
    }
}

/// A fixed set of variables.
#[derive(Clone, Debug, Default)]
pub struct MapEnv(pub BTreeMap<String, String>);

impl MapEnv {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = (S, S)>) -> Self {
        MapEnv(vars.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl Env for MapEnv {
    fn var(&self, name: &str) -> Option<String> {
        self.0.get(name).cloned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildTool {
    Maven,
    Gradle,
}

/// Per-user dependency caches: tool, override variable, path under home.
pub const CACHE_LOCATIONS: [(BuildTool, &str, &str); 2] = [
    (BuildTool::Maven, "CRYPTOSLICE_MAVEN_REPO", ".m2/repository"),
    (BuildTool::Gradle, "CRYPTOSLICE_GRADLE_CACHE", ".gradle/caches/modules-2/files-2.1"),
];

/// Existing dependency cache directories, Maven first. Computed from the
/// environment at call time.
pub fn resolve_dependency_dirs(hint: Option<BuildTool>, env: &dyn Env) -> Vec<PathBuf> {
    CACHE_LOCATIONS
        .iter()
        .filter(|(tool, _, _)| hint.is_none_or(|h| h == *tool))
        .filter_map(|(_, var, rel)| match env.var(var).filter(|v| !v.is_empty()) {
            Some(over) => Some(PathBuf::from(over)),
            None => env.home_dir().map(|h| h.join(rel)),
        })
        .filter(|p| p.is_dir())
        .collect()
}
