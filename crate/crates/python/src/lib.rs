//! Python bindings: vocabularies, the synthetic cipher languages, the
//! automatic metrics, gradient checks and trained checkpoints.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use mbst::autodiff::{check_primitive, PrimitiveKind};
use mbst::corpus::{synth_generate, Lang, Style, SynthRequest, SyntheticLanguageSpec};
use mbst::eval::{perplexity, NGramLM};
use mbst::style::StyleCheckpoint;

fn py_err(e: mbst::Error) -> PyErr {
    match e {
        mbst::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(module = "mbst_py")]
struct Vocabulary {
    inner: mbst::corpus::Vocabulary,
}

#[pymethods]
impl Vocabulary {
    #[new]
    #[pyo3(signature = (sentences, max_size = 512))]
    fn new(sentences: Vec<Vec<String>>, max_size: usize) -> PyResult<Self> {
        let inner = mbst::corpus::Vocabulary::build(&sentences, max_size).map_err(py_err)?;
        Ok(Vocabulary { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn id(&self, token: &str) -> u32 {
        self.inner.id(token)
    }

    fn token(&self, id: u32) -> Option<String> {
        self.inner.token(id).map(str::to_string)
    }

    fn encode(&self, tokens: Vec<String>) -> Vec<u32> {
        self.inner.encode(&tokens)
    }

    fn decode(&self, ids: Vec<u32>) -> Vec<String> {
        self.inner.decode(&ids)
    }
}

fn lang(name: &str) -> PyResult<Lang> {
    name.parse().map_err(py_err)
}

#[pyclass(module = "mbst_py")]
struct SyntheticLanguage {
    spec: SyntheticLanguageSpec,
}

#[pymethods]
impl SyntheticLanguage {
    #[new]
    fn new(seed: u64) -> Self {
        SyntheticLanguage {
            spec: SyntheticLanguageSpec::new(seed),
        }
    }

    /// Oracle translation of an English sentence into `l1` or `l2`.
    fn translate(&self, tokens: Vec<String>, target: &str) -> PyResult<Vec<String>> {
        self.spec.oracle_translate(&tokens, lang(target)?).map_err(py_err)
    }

    fn back_translate(&self, tokens: Vec<String>, source: &str) -> PyResult<Vec<String>> {
        self.spec.oracle_back_translate(&tokens, lang(source)?).map_err(py_err)
    }

    /// `"s1"`, `"s2"` or `None` when the sentence carries no single marker style.
    fn detect_style(&self, tokens: Vec<String>) -> Option<&'static str> {
        self.spec.detect_style(&tokens).map(Style::name)
    }

    /// Labeled style sentences as `(label, tokens)` pairs.
    #[pyo3(signature = (n, min_len = 3, max_len = 8))]
    fn style_sentences(&self, n: usize, min_len: usize, max_len: usize) -> PyResult<Vec<(String, Vec<String>)>> {
        let req = SynthRequest {
            n_parallel: 1,
            n_parallel_test: 1,
            n_style: n,
            style_len: (min_len, max_len),
            ..SynthRequest::default()
        };
        let c = synth_generate(&self.spec, &req).map_err(py_err)?;
        Ok(c.style
            .examples
            .into_iter()
            .map(|e| (e.style.name().to_string(), e.tokens))
            .collect())
    }
}

#[pyfunction]
fn bleu(hyps: Vec<Vec<String>>, refs: Vec<Vec<String>>) -> PyResult<f64> {
    mbst::eval::bleu(&hyps, &refs).map_err(py_err)
}

#[pyclass(module = "mbst_py")]
struct LanguageModel {
    inner: NGramLM,
}

#[pymethods]
impl LanguageModel {
    #[new]
    fn new(sentences: Vec<Vec<String>>) -> PyResult<Self> {
        Ok(LanguageModel {
            inner: NGramLM::train(&sentences).map_err(py_err)?,
        })
    }

    fn prob(&self, h2: &str, h1: &str, w: &str) -> f64 {
        self.inner.prob(h2, h1, w)
    }

    fn perplexity(&self, sentences: Vec<Vec<String>>) -> PyResult<f64> {
        perplexity(&self.inner, &sentences).map_err(py_err)
    }
}

#[pyfunction]
fn primitives() -> Vec<&'static str> {
    PrimitiveKind::ALL.iter().map(|k| k.name()).collect()
}

/// Largest relative gradient error of a primitive on a random instance.
#[pyfunction]
#[pyo3(signature = (primitive, seed = 0, eps = 1e-5))]
fn grad_check(primitive: &str, seed: u64, eps: f64) -> PyResult<f64> {
    let kind: PrimitiveKind = primitive.parse().map_err(py_err)?;
    Ok(check_primitive(kind, seed, eps).map_err(py_err)?.max_rel_error)
}

#[pyclass(module = "mbst_py")]
struct Checkpoint {
    inner: StyleCheckpoint,
}

#[pymethods]
impl Checkpoint {
    #[new]
    fn new(path: PathBuf) -> PyResult<Self> {
        Ok(Checkpoint {
            inner: StyleCheckpoint::load(&path).map_err(py_err)?,
        })
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant().name()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Returns the transferred tokens and whether the input was copied.
    fn transfer(&self, tokens: Vec<String>, style: &str) -> PyResult<(Vec<String>, bool)> {
        let style: Style = style.parse().map_err(py_err)?;
        let t = self.inner.transfer(&tokens, style).map_err(py_err)?;
        Ok((t.tokens, t.flagged))
    }
}

#[pymodule]
fn mbst_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Vocabulary>()?;
    m.add_class::<SyntheticLanguage>()?;
    m.add_class::<LanguageModel>()?;
    m.add_class::<Checkpoint>()?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(primitives, m)?)?;
    m.add_function(wrap_pyfunction!(grad_check, m)?)?;
    Ok(())
}
