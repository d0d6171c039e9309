use std::collections::{BTreeMap, HashMap};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_ADD_K: f64 = 0.01;

/// Add-k smoothed n-gram model over the training words plus `</s>` and
/// `<unk>`; contexts are padded with `order - 1` copies of `<s>`.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageModel {
    order: usize,
    add_k: f64,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// Full-order n-gram counts.
    counts: HashMap<Vec<u32>, u64>,
    context_totals: HashMap<Vec<u32>, u64>,
}

impl LanguageModel {
    pub fn train(sentences: &[&[String]], order: usize, add_k: f64) -> Self {
        assert!(order >= 1, "n-gram order must be positive");
        let mut words: Vec<String> = sentences.iter().flat_map(|s| s.iter().cloned()).collect();
        words.sort();
        words.dedup();
        let mut lm = LanguageModel::empty(words, order, add_k);
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for s in sentences {
            let ids = lm.encode(s);
            for gram in ids.windows(order) {
                *counts.entry(gram.to_vec()).or_default() += 1;
            }
        }
        for (gram, c) in counts {
            lm.insert(gram, c);
        }
        lm
    }

    fn empty(vocab: Vec<String>, order: usize, add_k: f64) -> Self {
        let mut index: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let v = vocab.len() as u32;
        index.insert(EOS.to_owned(), v);
        index.insert(UNK.to_owned(), v + 1);
        index.insert(BOS.to_owned(), v + 2);
        LanguageModel {
            order,
            add_k,
            vocab,
            index,
            counts: HashMap::new(),
            context_totals: HashMap::new(),
        }
    }

    fn insert(&mut self, gram: Vec<u32>, count: u64) {
        *self.context_totals.entry(gram[..gram.len() - 1].to_vec()).or_default() += count;
        *self.counts.entry(gram).or_default() += count;
    }

    pub(crate) fn from_counts(vocab: Vec<String>, order: usize, add_k: f64, counts: Vec<(Vec<String>, u64)>) -> Self {
        let mut lm = LanguageModel::empty(vocab, order, add_k);
        for (gram, c) in counts {
            let ids = gram.iter().map(|w| lm.id(w)).collect();
            lm.insert(ids, c);
        }
        lm
    }

    fn id(&self, w: &str) -> u32 {
        self.index.get(w).copied().unwrap_or(self.vocab.len() as u32 + 1)
    }

    fn encode(&self, sentence: &[String]) -> Vec<u32> {
        let bos = self.vocab.len() as u32 + 2;
        let eos = self.vocab.len() as u32;
        let mut ids = vec![bos; self.order - 1];
        ids.extend(sentence.iter().map(|w| self.id(w)));
        ids.push(eos);
        ids
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    /// Size of the predicted vocabulary: training words, `</s>`, `<unk>`.
    pub fn extended_size(&self) -> usize {
        self.vocab.len() + 2
    }

    fn prob_ids(&self, context: &[u32], word: u32) -> f64 {
        let mut gram = context.to_vec();
        gram.push(word);
        let c = self.counts.get(&gram).copied().unwrap_or(0) as f64;
        let total = self.context_totals.get(context).copied().unwrap_or(0) as f64;
        (c + self.add_k) / (total + self.add_k * self.extended_size() as f64)
    }

    /// `P(word | context)`; `context` holds the preceding `order - 1` words
    /// (use `<s>` for padding).
    pub fn prob(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id(w)).collect();
        self.prob_ids(&ctx, self.id(word))
    }

    /// Log-probability of the sentence followed by `</s>`.
    pub fn log_prob(&self, sentence: &[String]) -> f64 {
        let ids = self.encode(sentence);
        ids.windows(self.order)
            .map(|g| self.prob_ids(&g[..g.len() - 1], g[g.len() - 1]).ln())
            .sum()
    }

    /// Stored n-grams as words, sorted.
    pub fn ngram_counts(&self) -> Vec<(Vec<String>, u64)> {
        let name = |id: u32| -> String {
            let v = self.vocab.len() as u32;
            match id {
                i if i < v => self.vocab[i as usize].clone(),
                i if i == v => EOS.to_owned(),
                i if i == v + 1 => UNK.to_owned(),
                _ => BOS.to_owned(),
            }
        };
        let mut out: Vec<(Vec<String>, u64)> = self
            .counts
            .iter()
            .map(|(g, &c)| (g.iter().map(|&i| name(i)).collect(), c))
            .collect();
        out.sort();
        out
    }
}
