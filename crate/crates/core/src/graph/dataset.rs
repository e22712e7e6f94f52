use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{citation_like, load_content_cites, read_native, CitationProfile, Graph};
use crate::tensor::Rng;

/// Seed of the built-in surrogate graphs.
pub const SURROGATE_SEED: u64 = 7;

/// Where a resolved graph came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Native(PathBuf),
    Raw { content: PathBuf, cites: PathBuf },
    Surrogate(&'static str),
}

#[derive(Debug, Clone)]
pub struct NamedGraph {
    pub name: String,
    pub graph: Graph,
    pub source: Source,
}

impl NamedGraph {
    pub fn is_surrogate(&self) -> bool {
        matches!(self.source, Source::Surrogate(_))
    }
}

fn surrogate(name: &str) -> Option<CitationProfile> {
    match name {
        "cora-like" => Some(CitationProfile::cora()),
        "citeseer-like" => Some(CitationProfile::citeseer()),
        _ => None,
    }
}

fn stem_of(path: &Path) -> String {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [".graph.txt", ".content", ".cites"] {
        if let Some(s) = file.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    file
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn try_dir(dir: &Path, name: &str) -> Option<Source> {
    for base in [dir.join(name), dir.join(name).join(name)] {
        let native = with_ext(&base, ".graph.txt");
        if native.is_file() {
            return Some(Source::Native(native));
        }
        let (content, cites) = (with_ext(&base, ".content"), with_ext(&base, ".cites"));
        if content.is_file() && cites.is_file() {
            return Some(Source::Raw { content, cites });
        }
    }
    None
}

/// Resolves a dataset argument, in order:
/// 1. `cora-like` / `citeseer-like`: the built-in surrogates;
/// 2. an existing native graph file;
/// 3. a path or stem with `.content` and `.cites` siblings;
/// 4. a bare name looked up in `data_dir` as `<name>.graph.txt`,
///    `<name>.content`/`.cites`, or the same inside `<name>/`.
pub fn resolve_dataset(spec: &str, data_dir: Option<&Path>) -> Result<NamedGraph> {
    if let Some(profile) = surrogate(spec) {
        let graph = citation_like(&profile, &mut Rng::new(SURROGATE_SEED))?;
        return Ok(NamedGraph {
            name: profile.name.to_string(),
            graph,
            source: Source::Surrogate(profile.name),
        });
    }
    let path = Path::new(spec);
    let stem_base = path.with_file_name(stem_of(path));
    let source = if path.is_file() && !spec.ends_with(".content") && !spec.ends_with(".cites") {
        Some(Source::Native(path.to_path_buf()))
    } else if with_ext(&stem_base, ".content").is_file() && with_ext(&stem_base, ".cites").is_file() {
        Some(Source::Raw {
            content: with_ext(&stem_base, ".content"),
            cites: with_ext(&stem_base, ".cites"),
        })
    } else {
        data_dir.and_then(|d| try_dir(d, spec))
    };
    let Some(source) = source else {
        let looked = match data_dir {
            Some(d) => format!("{spec} (also searched {})", d.display()),
            None => spec.to_string(),
        };
        return Err(Error::io(
            looked,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset not found"),
        ));
    };
    let graph = match &source {
        Source::Native(p) => read_native(p)?,
        Source::Raw { content, cites } => load_content_cites(content, cites)?.graph,
        Source::Surrogate(_) => unreachable!("handled above"),
    };
    Ok(NamedGraph {
        name: stem_of(path),
        graph,
        source,
    })
}
