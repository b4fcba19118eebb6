use serde::{Deserialize, Serialize};

/// Prompt template used to derive a condition label from instrument metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStyle {
    /// Describes sampler output: `"synthetic, <instrument>"`.
    Source,
    /// Describes the refinement target: `"realistic, <instrument>"`.
    Target,
    /// `"Solo, realistic, <instrument>, classical, well-recorded, professional"`.
    FullTemplate,
}

impl ConditionStyle {
    pub fn label(self, instrument: &str) -> String {
        match self {
            ConditionStyle::Source => format!("synthetic, {instrument}"),
            ConditionStyle::Target => format!("realistic, {instrument}"),
            ConditionStyle::FullTemplate => {
                format!("Solo, realistic, {instrument}, classical, well-recorded, professional")
            }
        }
    }
}

/// A resolved conditioning label. Index 0 is the reserved null condition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Condition {
    pub label: String,
    pub index: usize,
}

impl Condition {
    pub fn null() -> Self {
        Condition {
            label: String::new(),
            index: 0,
        }
    }

    pub fn is_null(&self) -> bool {
        self.index == 0
    }
}

/// Discrete label set of a denoiser's embedding table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    /// Entry 0 is the null label "".
    labels: Vec<String>,
}

impl Vocabulary {
    /// Sorted, de-duplicated labels after the null entry.
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = labels.into_iter().map(Into::into).filter(|l| !l.is_empty()).collect();
        v.sort();
        v.dedup();
        v.insert(0, String::new());
        Vocabulary { labels: v }
    }

    pub(crate) fn from_raw(labels: Vec<String>) -> Self {
        Vocabulary { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn lookup(&self, label: &str) -> Option<Condition> {
        if label.is_empty() {
            return Some(Condition::null());
        }
        self.labels[1..].binary_search_by(|l| l.as_str().cmp(label)).ok().map(|k| Condition {
            label: label.to_string(),
            index: k + 1,
        })
    }

    /// Unknown labels resolve to the null condition with a warning.
    pub fn resolve(&self, label: &str) -> Condition {
        self.lookup(label).unwrap_or_else(|| {
            log::warn!("condition {label:?} not in vocabulary; using the null condition");
            Condition::null()
        })
    }
}

/// Label from the template for `style`, resolved against `vocabulary`.
pub fn condition_from_metadata(instrument: &str, style: ConditionStyle, vocabulary: &Vocabulary) -> Condition {
    vocabulary.resolve(&style.label(instrument))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates() {
        assert_eq!(ConditionStyle::Source.label("violin"), "synthetic, violin");
        assert_eq!(ConditionStyle::Target.label("violin"), "realistic, violin");
        assert_eq!(
            ConditionStyle::FullTemplate.label("violin"),
            "Solo, realistic, violin, classical, well-recorded, professional"
        );
    }

    #[test]
    fn resolution_and_null_fallback() {
        let v = Vocabulary::new(["synthetic, violin", "realistic, violin", "synthetic, violin"]);
        assert_eq!(v.len(), 3);
        let c = condition_from_metadata("violin", ConditionStyle::Target, &v);
        assert_eq!((c.label.as_str(), c.index), ("realistic, violin", 1));
        assert_eq!(condition_from_metadata("violin", ConditionStyle::Source, &v).index, 2);
        let unknown = condition_from_metadata("tuba", ConditionStyle::Source, &v);
        assert!(unknown.is_null());
    }
}
