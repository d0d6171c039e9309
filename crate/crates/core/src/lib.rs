//! Learning to sportscast from ambiguous supervision: a meaning
//! representation language for soccer events, window-based pairing of
//! comments with events, an alignment/template translation model, iterative
//! disambiguation of the training pairs, and strategic selection of what to
//! say.

pub mod cli;
pub mod corpus;
pub mod learner;
pub mod metrics;
pub mod mrl;
pub mod report;
pub mod simgen;
pub mod strategic;
pub mod translator;
