use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EmbeddingProvider, EmbeddingVector, Topic};
use crate::error::{Error, Result};

const BUILTIN: [(Topic, &str); 8] = [
    (
        Topic::Ethics,
        include_str!("../../../../config/lexicons/ethics.txt"),
    ),
    (
        Topic::Politics,
        include_str!("../../../../config/lexicons/politics.txt"),
    ),
    (
        Topic::Religion,
        include_str!("../../../../config/lexicons/religion.txt"),
    ),
    (
        Topic::Mathematics,
        include_str!("../../../../config/lexicons/mathematics.txt"),
    ),
    (
        Topic::Science,
        include_str!("../../../../config/lexicons/science.txt"),
    ),
    (
        Topic::Art,
        include_str!("../../../../config/lexicons/art.txt"),
    ),
    (
        Topic::Metaphysics,
        include_str!("../../../../config/lexicons/metaphysics.txt"),
    ),
    (
        Topic::Epistemology,
        include_str!("../../../../config/lexicons/epistemology.txt"),
    ),
];

/// Seed word list per topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeMap<Topic, BTreeSet<String>>,
}

fn parse_words(raw: &str) -> BTreeSet<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl Lexicon {
    pub fn builtin() -> Self {
        Lexicon {
            words: BUILTIN
                .iter()
                .map(|(t, raw)| (*t, parse_words(raw)))
                .collect(),
        }
    }

    /// Load `<dir>/<topic>.txt` for all eight topics.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut words = BTreeMap::new();
        for t in Topic::ALL {
            let path = dir.join(format!("{}.txt", t.as_str()));
            let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            words.insert(t, parse_words(&raw));
        }
        Self::from_words(words)
    }

    pub fn from_words(words: BTreeMap<Topic, BTreeSet<String>>) -> Result<Self> {
        for t in Topic::ALL {
            if words.get(&t).is_none_or(|w| w.is_empty()) {
                return Err(Error::Config(format!("lexicon for `{t}` is empty")));
            }
        }
        Ok(Lexicon { words })
    }

    pub fn words(&self, topic: Topic) -> &BTreeSet<String> {
        &self.words[&topic]
    }
}

/// Offline provider: a document is its term-frequency vector over the union
/// of all topic lexicons, L2-normalized. A bare topic term (e.g. `ethics`)
/// contributes the unit vector spread uniformly over that topic's lexicon,
/// so a topic term embeds to its topic vector.
pub struct LexiconProvider {
    id: String,
    vocab: HashMap<String, usize>,
    dim: usize,
    topic_dims: HashMap<&'static str, Vec<usize>>,
}

impl LexiconProvider {
    pub fn new(lexicon: &Lexicon) -> Self {
        let all: BTreeSet<&String> = lexicon.words.values().flatten().collect();
        let vocab: HashMap<String, usize> = all
            .iter()
            .enumerate()
            .map(|(i, w)| ((*w).clone(), i))
            .collect();
        let topic_dims = Topic::ALL
            .iter()
            .map(|t| {
                (
                    t.as_str(),
                    lexicon.words(*t).iter().map(|w| vocab[w]).collect(),
                )
            })
            .collect();
        let mut hasher = Sha256::new();
        for (t, ws) in &lexicon.words {
            hasher.update(t.as_str().as_bytes());
            for w in ws {
                hasher.update(b"\0");
                hasher.update(w.as_bytes());
            }
            hasher.update(b"\n");
        }
        let digest = hex::encode(hasher.finalize());
        LexiconProvider {
            id: format!("lexicon:{}", &digest[..12]),
            dim: all.len(),
            vocab,
            topic_dims,
        }
    }

    pub fn builtin() -> Self {
        Self::new(&Lexicon::builtin())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vocabulary index of `word`, if it belongs to any lexicon.
    pub fn dimension_of(&self, word: &str) -> Option<usize> {
        self.vocab.get(word).copied()
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector> {
        let mut v = vec![0.0f64; self.dim];
        for token in text
            .split(|c: char| !c.is_alphabetic())
            .filter(|t| !t.is_empty())
        {
            let token = token.to_lowercase();
            if let Some(dims) = self.topic_dims.get(token.as_str()) {
                let share = 1.0 / (dims.len() as f64).sqrt();
                for &d in dims {
                    v[d] += share;
                }
            } else if let Some(&d) = self.vocab.get(&token) {
                v[d] += 1.0;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector::new(v)
    }
}

impl EmbeddingProvider for LexiconProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| {
                if t.trim().is_empty() {
                    Err(Error::Input("cannot embed empty text".into()))
                } else {
                    self.embed_one(t)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{cosine_similarity, embed};

    #[test]
    fn builtin_lexicons_are_complete() {
        let lex = Lexicon::builtin();
        for t in Topic::ALL {
            assert!(!lex.words(t).is_empty(), "{t}");
        }
    }

    #[test]
    fn embedding_is_deterministic() {
        let p = LexiconProvider::builtin();
        let a = embed("The point is the beginning of Geometry", &p).unwrap();
        let b = embed("The point is the beginning of Geometry", &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), p.dim());
    }

    #[test]
    fn geometry_lands_on_mathematics_dimensions() {
        let p = LexiconProvider::builtin();
        let lex = Lexicon::builtin();
        let v = embed("geometry", &p).unwrap();
        let math_dims: BTreeSet<usize> = lex
            .words(Topic::Mathematics)
            .iter()
            .map(|w| p.dimension_of(w).unwrap())
            .collect();
        // Hand computation: one token, in the lexicon, weight 1 before
        // normalization, so all of the unit mass sits on `geometry`.
        let g = p.dimension_of("geometry").unwrap();
        for (i, x) in v.values().iter().enumerate() {
            if i == g {
                assert_eq!(*x, 1.0);
            } else {
                assert_eq!(*x, 0.0);
            }
        }
        assert!(math_dims.contains(&g));
    }

    #[test]
    fn topic_term_matches_its_topic_vector() {
        let p = LexiconProvider::builtin();
        for t in Topic::ALL {
            let a = embed(t.as_str(), &p).unwrap();
            let b = embed(&t.as_str().to_uppercase(), &p).unwrap();
            assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_words_embed_to_zero() {
        let p = LexiconProvider::builtin();
        assert!(embed("zzz qqq", &p).unwrap().is_zero());
        assert!(embed("   ", &p).is_err());
    }

    #[test]
    fn provider_id_tracks_lexicon_content() {
        let a = LexiconProvider::builtin();
        let mut words: BTreeMap<Topic, BTreeSet<String>> = Topic::ALL
            .iter()
            .map(|t| (*t, Lexicon::builtin().words(*t).clone()))
            .collect();
        words.get_mut(&Topic::Art).unwrap().insert("opera".into());
        let b = LexiconProvider::new(&Lexicon::from_words(words).unwrap());
        assert_ne!(a.id(), b.id());
    }
}
