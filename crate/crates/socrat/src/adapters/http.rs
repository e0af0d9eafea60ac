//! JSON-over-HTTP adapters: `POST /translate` for black boxes and
//! `POST /perturb` for external perturbation generators.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use socrat_core::{tokenize, BlackBox, Error, Perturber, PerturberConfig, Response, Scheme, Side, TokenSequence};

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into()
}

fn endpoint(url: &str, path: &str) -> String {
    let base = url.trim_end_matches('/');
    if base.ends_with(path) {
        base.to_string()
    } else {
        format!("{base}{path}")
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    inputs: Vec<&'a str>,
}

#[derive(Deserialize)]
struct TranslateResponse {
    outputs: Vec<Option<String>>,
}

pub struct HttpBlackBox {
    url: String,
    agent: ureq::Agent,
    input_scheme: Scheme,
    output_scheme: Scheme,
    chunk: usize,
    max_parallel: usize,
}

impl HttpBlackBox {
    pub fn new(
        url: &str,
        timeout: Duration,
        input_scheme: Scheme,
        output_scheme: Scheme,
        chunk: usize,
        max_parallel: usize,
    ) -> Self {
        HttpBlackBox {
            url: endpoint(url, "/translate"),
            agent: agent(timeout),
            input_scheme,
            output_scheme,
            chunk: chunk.max(1),
            max_parallel: max_parallel.max(1),
        }
    }

    fn post(&self, inputs: &[TokenSequence]) -> socrat_core::Result<Vec<Response>> {
        let joined: Vec<String> = inputs.iter().map(|x| x.join(self.input_scheme)).collect();
        let body = TranslateRequest { inputs: joined.iter().map(String::as_str).collect() };
        let fail = |reason: String| Error::black_box(None, reason);
        let mut resp = self.agent.post(&self.url).send_json(&body).map_err(|e| fail(format!("{}: {e}", self.url)))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(fail(format!("{} answered HTTP {status}", self.url)));
        }
        let parsed: TranslateResponse =
            resp.body_mut().read_json().map_err(|e| Error::Protocol(format!("{}: {e}", self.url)))?;
        if parsed.outputs.len() != inputs.len() {
            return Err(Error::Protocol(format!(
                "{} returned {} outputs for {} inputs",
                self.url,
                parsed.outputs.len(),
                inputs.len()
            )));
        }
        Ok(parsed
            .outputs
            .into_iter()
            .map(|o| match o.as_deref().map(|s| tokenize(s, self.output_scheme, Side::Output)) {
                Some(Ok(y)) => Response::Tokens(y),
                _ => Response::Absent,
            })
            .collect())
    }
}

impl BlackBox for HttpBlackBox {
    /// Splits `inputs` into requests of at most `chunk` inputs, with up to
    /// `max_parallel` requests in flight.
    fn query_batch(&self, inputs: &[TokenSequence]) -> socrat_core::Result<Vec<Response>> {
        let chunks: Vec<&[TokenSequence]> = inputs.chunks(self.chunk).collect();
        let mut out = Vec::with_capacity(inputs.len());
        for wave in chunks.chunks(self.max_parallel) {
            let results: Vec<socrat_core::Result<Vec<Response>>> = if wave.len() == 1 {
                vec![self.post(wave[0])]
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = wave.iter().map(|c| s.spawn(move || self.post(c))).collect();
                    handles.into_iter().map(|h| h.join().expect("request thread panicked")).collect()
                })
            };
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct PerturbRequest<'a> {
    input: &'a str,
    n: usize,
    scaling: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct PerturbResponse {
    samples: Vec<String>,
}

/// Client for an external sentence generator. Samples are tokenized on
/// whitespace.
pub struct HttpPerturber {
    url: String,
    agent: ureq::Agent,
}

impl HttpPerturber {
    pub fn new(url: &str, timeout: Duration) -> Self {
        HttpPerturber { url: endpoint(url, "/perturb"), agent: agent(timeout) }
    }
}

impl Perturber for HttpPerturber {
    fn perturb(&mut self, x: &TokenSequence, cfg: &PerturberConfig) -> socrat_core::Result<Vec<TokenSequence>> {
        cfg.validate()?;
        let sentence = x.join(Scheme::Whitespace);
        let body = PerturbRequest { input: &sentence, n: cfg.n_samples, scaling: cfg.scaling, seed: cfg.seed };
        let unavailable = |m: String| Error::ExternalPerturberUnavailable(m);
        let mut resp = self.agent.post(&self.url).send_json(&body).map_err(|e| unavailable(format!("{}: {e}", self.url)))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(unavailable(format!("{} answered HTTP {status}", self.url)));
        }
        let parsed: PerturbResponse =
            resp.body_mut().read_json().map_err(|e| Error::Protocol(format!("{}: {e}", self.url)))?;
        if parsed.samples.len() != cfg.n_samples {
            return Err(Error::Protocol(format!(
                "{} returned {} samples, expected {}",
                self.url,
                parsed.samples.len(),
                cfg.n_samples
            )));
        }
        parsed
            .samples
            .iter()
            .map(|s| tokenize(s, Scheme::Whitespace, Side::Input).map_err(|e| Error::Protocol(e.to_string())))
            .collect()
    }
}
