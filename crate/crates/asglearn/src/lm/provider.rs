//! Logit providers: scoring functions over vocabulary entries.
//!
//! A provider returns one finite score per vocabulary entry — every token in
//! order, then the end marker — and must be deterministic given the instance
//! and prefix. Three implementations: a uniform baseline, a character n-gram
//! model fitted on exemplar strings (the stand-in for a few-shot prompt
//! prior), and a remote provider that fetches scores from a logits server.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{TokenId, Vocabulary};

use super::ProblemInstance;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("remote logits request failed after {attempts} attempts: {message}")]
    Remote { attempts: usize, message: String },
    #[error("remote returned {got} scores, vocabulary has {want} entries")]
    WrongArity { got: usize, want: usize },
    #[error("remote returned a non-finite score at entry {index}")]
    NonFiniteScore { index: usize },
}

/// Scores vocabulary entries for a (instance, prefix) pair. Implementations
/// must be deterministic; `single_flight` providers are called from one
/// thread at a time.
pub trait LogitProvider: Send + Sync {
    /// One score per entry: `vocabulary.len()` token scores followed by the
    /// end-marker score.
    fn score(
        &self,
        instance: &ProblemInstance,
        prefix: &[TokenId],
        vocabulary: &Vocabulary,
    ) -> Result<Vec<f64>, ProviderError>;

    /// True when the provider must not be called concurrently.
    fn single_flight(&self) -> bool {
        false
    }
}

/// All scores zero: masked sampling becomes uniform over allowed entries.
#[derive(Debug, Clone, Default)]
pub struct UniformProvider;

impl LogitProvider for UniformProvider {
    fn score(
        &self,
        _instance: &ProblemInstance,
        _prefix: &[TokenId],
        vocabulary: &Vocabulary,
    ) -> Result<Vec<f64>, ProviderError> {
        Ok(vec![0.0; vocabulary.entry_count()])
    }
}

/// Character n-gram model with add-one smoothing, fitted on exemplar
/// strings. A token scores the summed log-probability of its characters
/// given the running character context; the end marker scores the
/// end-of-string symbol. Instances are ignored: the exemplars play the role
/// of a fixed prompt prior.
#[derive(Debug, Clone)]
pub struct NgramProvider {
    order: usize,
    counts: HashMap<Vec<char>, HashMap<Option<char>, u64>>,
    alphabet: BTreeSet<char>,
}

impl NgramProvider {
    /// `order` ≥ 1 is the n-gram length (context = order − 1 characters).
    pub fn fit(order: usize, exemplars: &[&str]) -> Self {
        assert!(order >= 1, "n-gram order must be at least 1");
        let mut counts: HashMap<Vec<char>, HashMap<Option<char>, u64>> = HashMap::new();
        let mut alphabet = BTreeSet::new();
        for text in exemplars {
            let chars: Vec<char> = text.chars().collect();
            alphabet.extend(chars.iter().copied());
            for i in 0..=chars.len() {
                let ctx_from = i.saturating_sub(order - 1);
                let ctx = chars[ctx_from..i].to_vec();
                let next = chars.get(i).copied();
                *counts.entry(ctx).or_default().entry(next).or_insert(0) += 1;
            }
        }
        NgramProvider {
            order,
            counts,
            alphabet,
        }
    }

    fn log_prob(&self, ctx: &[char], next: Option<char>, alphabet_size: usize) -> f64 {
        let ctx_from = ctx.len().saturating_sub(self.order - 1);
        let ctx = &ctx[ctx_from..];
        let bucket = self.counts.get(ctx);
        let hits = bucket.and_then(|b| b.get(&next)).copied().unwrap_or(0);
        let total: u64 = bucket.map(|b| b.values().sum()).unwrap_or(0);
        // Add-one smoothing over the alphabet plus the end symbol.
        let denom = total as f64 + (alphabet_size + 1) as f64;
        (((hits + 1) as f64) / denom).ln()
    }
}

impl LogitProvider for NgramProvider {
    fn score(
        &self,
        _instance: &ProblemInstance,
        prefix: &[TokenId],
        vocabulary: &Vocabulary,
    ) -> Result<Vec<f64>, ProviderError> {
        let mut alphabet = self.alphabet.clone();
        for token in vocabulary.tokens() {
            alphabet.extend(token.text().chars());
        }
        let mut context: Vec<char> = Vec::new();
        for &id in prefix {
            context.extend(vocabulary.token_text(id).chars());
        }
        let mut scores = Vec::with_capacity(vocabulary.entry_count());
        for token in vocabulary.tokens() {
            let mut ctx = context.clone();
            let mut total = 0.0;
            for c in token.text().chars() {
                total += self.log_prob(&ctx, Some(c), alphabet.len());
                ctx.push(c);
            }
            scores.push(total);
        }
        scores.push(self.log_prob(&context, None, alphabet.len()));
        Ok(scores)
    }
}

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    instance_id: &'a str,
    prefix_tokens: Vec<&'a str>,
    vocabulary_id: &'a str,
}

#[derive(Debug, Deserialize)]
struct RemoteResponse {
    scores: Vec<f64>,
}

/// Fetches scores from an external logits server: one JSON object per line
/// over HTTP POST, `{instance_id, prefix_tokens, vocabulary_id}` in,
/// `{scores}` aligned to vocabulary order (end marker last) out.
pub struct RemoteProvider {
    agent: ureq::Agent,
    url: String,
    vocabulary_id: String,
    retries: usize,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>, vocabulary_id: impl Into<String>) -> Self {
        Self::with_options(url, vocabulary_id, Duration::from_secs(10), 2)
    }

    pub fn with_options(
        url: impl Into<String>,
        vocabulary_id: impl Into<String>,
        timeout: Duration,
        retries: usize,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteProvider {
            agent,
            url: url.into(),
            vocabulary_id: vocabulary_id.into(),
            retries,
        }
    }

    fn request_once(
        &self,
        instance: &ProblemInstance,
        prefix: &[TokenId],
        vocabulary: &Vocabulary,
    ) -> Result<RemoteResponse, String> {
        let request = RemoteRequest {
            instance_id: &instance.id,
            prefix_tokens: prefix.iter().map(|&id| vocabulary.token_text(id)).collect(),
            vocabulary_id: &self.vocabulary_id,
        };
        let mut line = serde_json::to_string(&request).map_err(|e| e.to_string())?;
        line.push('\n');
        let mut response = self
            .agent
            .post(&self.url)
            .content_type("application/json")
            .send(&line)
            .map_err(|e| e.to_string())?;
        response
            .body_mut()
            .read_json::<RemoteResponse>()
            .map_err(|e| e.to_string())
    }
}

impl LogitProvider for RemoteProvider {
    fn score(
        &self,
        instance: &ProblemInstance,
        prefix: &[TokenId],
        vocabulary: &Vocabulary,
    ) -> Result<Vec<f64>, ProviderError> {
        let attempts = self.retries + 1;
        let mut last = String::new();
        for _ in 0..attempts {
            match self.request_once(instance, prefix, vocabulary) {
                Ok(response) => {
                    if response.scores.len() != vocabulary.entry_count() {
                        return Err(ProviderError::WrongArity {
                            got: response.scores.len(),
                            want: vocabulary.entry_count(),
                        });
                    }
                    if let Some(index) = response.scores.iter().position(|s| !s.is_finite()) {
                        return Err(ProviderError::NonFiniteScore { index });
                    }
                    return Ok(response.scores);
                }
                Err(message) => last = message,
            }
        }
        Err(ProviderError::Remote {
            attempts,
            message: last,
        })
    }

    fn single_flight(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn vocab() -> Vocabulary {
        Vocabulary::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn uniform_scores_are_zero() {
        let v = vocab();
        let scores = UniformProvider
            .score(&ProblemInstance::new("i", ""), &[], &v)
            .unwrap();
        assert_eq!(scores, vec![0.0; 4]);
    }

    #[test]
    fn ngram_prefers_continuations_seen_in_exemplars() {
        let v = vocab();
        let provider = NgramProvider::fit(3, &["aabbcc", "abc"]);
        let instance = ProblemInstance::new("i", "");
        // After "ab" (token ids 0 then 1) the exemplars continue with b or c,
        // never a.
        let scores = provider.score(&instance, &[0, 1], &v).unwrap();
        assert!(scores[1] > scores[0], "b beats a: {scores:?}");
        assert!(scores[2] > scores[0], "c beats a: {scores:?}");
        for s in &scores {
            assert!(s.is_finite());
        }
    }

    #[test]
    fn ngram_end_score_peaks_after_full_exemplar() {
        let v = vocab();
        let provider = NgramProvider::fit(3, &["abc"]);
        let instance = ProblemInstance::new("i", "");
        let after_full = provider.score(&instance, &[0, 1, 2], &v).unwrap();
        let after_partial = provider.score(&instance, &[0, 1], &v).unwrap();
        assert!(after_full[3] > after_partial[3]);
    }

    #[test]
    fn ngram_is_deterministic() {
        let v = vocab();
        let provider = NgramProvider::fit(2, &["aabbcc"]);
        let instance = ProblemInstance::new("i", "");
        let a = provider.score(&instance, &[0, 0], &v).unwrap();
        let b = provider.score(&instance, &[0, 0], &v).unwrap();
        assert_eq!(a, b);
    }

    /// Minimal HTTP/1.1 server answering each POST with a canned body;
    /// replies with 500 for the first `failures` requests.
    fn spawn_logits_server(
        scores: Vec<f64>,
        failures: usize,
    ) -> (
        String,
        Arc<AtomicUsize>,
        std::thread::JoinHandle<Vec<String>>,
    ) {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let url = format!("http://{}/logits", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_in_thread = hits.clone();
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            loop {
                let (stream, _) = listener.accept().expect("accept");
                let mut reader = BufReader::new(stream);
                let mut line = String::new();
                reader.read_line(&mut line).expect("request line");
                if line.trim().is_empty() {
                    break;
                }
                let mut content_length = 0usize;
                loop {
                    let mut header = String::new();
                    reader.read_line(&mut header).expect("header");
                    let header = header.trim();
                    if header.is_empty() {
                        break;
                    }
                    if let Some(v) = header.to_ascii_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0u8; content_length];
                reader.read_exact(&mut body).expect("body");
                bodies.push(String::from_utf8(body).unwrap());
                let n = hits_in_thread.fetch_add(1, Ordering::SeqCst);
                let mut stream = reader.into_inner();
                if n < failures {
                    let response = "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 0\r\nconnection: close\r\n\r\n";
                    stream.write_all(response.as_bytes()).unwrap();
                    continue;
                }
                let payload = serde_json::json!({ "scores": scores }).to_string();
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
                if bodies.len() > failures {
                    break;
                }
            }
            bodies
        });
        (url, hits, handle)
    }

    #[test]
    fn remote_provider_round_trip() {
        let v = vocab();
        let (url, hits, handle) = spawn_logits_server(vec![1.0, 2.0, 3.0, 0.5], 0);
        let provider = RemoteProvider::with_options(url, "abc-v1", Duration::from_secs(5), 0);
        let instance = ProblemInstance::new("task-7", "");
        let scores = provider.score(&instance, &[0, 2], &v).unwrap();
        assert_eq!(scores, vec![1.0, 2.0, 3.0, 0.5]);
        assert_eq!(hits.load(Ordering::SeqCst), 1);
        let bodies = handle.join().unwrap();
        let request: serde_json::Value = serde_json::from_str(bodies[0].trim()).unwrap();
        assert_eq!(request["instance_id"], "task-7");
        assert_eq!(request["vocabulary_id"], "abc-v1");
        assert_eq!(request["prefix_tokens"][0], "a");
        assert_eq!(request["prefix_tokens"][1], "c");
    }

    #[test]
    fn remote_provider_retries_after_server_error() {
        let v = vocab();
        let (url, hits, handle) = spawn_logits_server(vec![0.0, 0.0, 0.0, 0.0], 1);
        let provider = RemoteProvider::with_options(url, "abc-v1", Duration::from_secs(5), 2);
        let scores = provider
            .score(&ProblemInstance::new("i", ""), &[], &v)
            .unwrap();
        assert_eq!(scores.len(), 4);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
        handle.join().unwrap();
    }

    #[test]
    fn remote_provider_rejects_wrong_arity() {
        let v = vocab();
        let (url, _hits, handle) = spawn_logits_server(vec![1.0, 2.0], 0);
        let provider = RemoteProvider::with_options(url, "abc-v1", Duration::from_secs(5), 0);
        let err = provider
            .score(&ProblemInstance::new("i", ""), &[], &v)
            .unwrap_err();
        assert!(matches!(err, ProviderError::WrongArity { got: 2, want: 4 }));
        handle.join().unwrap();
    }

    #[test]
    fn remote_provider_reports_connection_failure() {
        let v = vocab();
        // Nothing listens on this port (bound then dropped).
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let provider = RemoteProvider::with_options(
            format!("http://127.0.0.1:{port}/logits"),
            "abc-v1",
            Duration::from_millis(300),
            1,
        );
        let err = provider
            .score(&ProblemInstance::new("i", ""), &[], &v)
            .unwrap_err();
        assert!(matches!(err, ProviderError::Remote { attempts: 2, .. }));
    }
}
