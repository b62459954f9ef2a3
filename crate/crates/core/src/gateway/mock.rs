use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{Backend, BackendFailure, GenerationRequest};

const OPENERS: &[&str] = &[
    "Consider the claim about {w}.",
    "The account of {w} deserves scrutiny.",
    "Everything hinges on what is said about {w}.",
    "Let us look closely at the reference to {w}.",
    "The report leans heavily on {w}.",
];

const BODY: &[&str] = &[
    "Independent outlets have described {w} in similar terms.",
    "No named source is offered for the statement on {w}.",
    "The wording around {w} is measured and specific.",
    "The language used for {w} is charged and emotional.",
    "Dates and places tied to {w} can be checked against public records.",
    "The description of {w} contradicts earlier coverage.",
    "A verifiable quotation anchors the point on {w}.",
    "The piece never explains how {w} was confirmed.",
    "Other reliable channels would be expected to mention {w}.",
    "The details about {w} are vague where they matter most.",
];

const CLOSERS: &[&str] = &[
    "On balance the argument stands.",
    "The opposing case leaves these gaps unanswered.",
    "These points remain open to verification.",
    "The evidence presented so far is uneven.",
    "Further corroboration would settle the matter.",
];

/// Deterministic phrase assembler seeded from a hash of the request texts and
/// the generation seed.
#[derive(Debug, Clone)]
pub struct MockBackend {
    id: String,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl MockBackend {
    pub fn new() -> Self {
        MockBackend { id: "mock".into() }
    }

    fn rng_for(req: &GenerationRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        for m in &req.messages {
            h.update((m.text.len() as u64).to_le_bytes());
            h.update(m.text.as_bytes());
        }
        h.update(req.settings.seed.to_le_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    pub fn assemble(req: &GenerationRequest) -> String {
        let mut rng = Self::rng_for(req);
        let user = req.user_text();
        let mut words: Vec<&str> = user
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.chars().count() >= 5)
            .collect();
        words.sort_unstable();
        words.dedup();
        let pick = |rng: &mut ChaCha8Rng| -> String {
            words.choose(rng).map(|w| w.to_lowercase()).unwrap_or_else(|| "the story".into())
        };
        let mut sentences = Vec::new();
        sentences.push(OPENERS.choose(&mut rng).unwrap().replace("{w}", &pick(&mut rng)));
        let n_body = rng.random_range(2..=4);
        for _ in 0..n_body {
            sentences.push(BODY.choose(&mut rng).unwrap().replace("{w}", &pick(&mut rng)));
        }
        sentences.push(CLOSERS.choose(&mut rng).unwrap().to_string());
        sentences.join(" ")
    }
}

impl Backend for MockBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, req: &GenerationRequest) -> Result<String, BackendFailure> {
        Ok(Self::assemble(req))
    }
}
