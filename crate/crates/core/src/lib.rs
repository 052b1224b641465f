//! Gender-role analysis of greeting-card messages.
//!
//! The pipeline extracts lexicon topics from two groups of messages
//! ([`lexicon`]), ranks the topics by odds ratio between the groups
//! ([`genderstats`]) and checks the resulting topic lists against word
//! embeddings with WEAT ([`weat`]). [`scorer`] reuses the odds ratios to give
//! a single draft message a 0–100 femininity score.

pub mod corpus;
pub mod genderstats;
pub mod lexicon;
pub mod pipeline;
pub mod report;
pub mod scorer;
pub mod token;
pub mod weat;

pub use corpus::{
    build_prompts, classify_gender, AgeGroup, Corpus, CorpusError, GreetingMessage, IndicatorSets,
    Prompt, PromptSpec, PromptTemplate, RecipientGender, Scenario, ScenarioPrefixes, Source,
};
pub use genderstats::{
    assign_tiers, odds_ratio, rank_gendered_topics, GenderTopicReport, RankConfig, StatsError,
    Tier, TopicOddsRecord,
};
pub use lexicon::{
    filter_topics, profile_messages, profile_texts, top_topics_for_message, FilterConfig,
    KeywordHit, LexiconError, TopicLexicon, TopicMatch, TopicProfile,
};
pub use pipeline::{AnalysisConfig, GroupPair, PipelineError, ScenarioSelector};
pub use scorer::{
    band_of, score_message, Band, GenderAssoc, GenderStatsSnapshot, MessageAnalysis, ScoreError,
};
pub use token::{tokenize, Span, Token};
pub use weat::{association, weat_effect_size, EmbeddingStore, WeatError, WeatInput, WeatResult};
