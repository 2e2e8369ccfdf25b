//! Desk-scale laboratory for multi-task legal judgment prediction.
//!
//! The pipeline: generate a synthetic multi-task corpus with scattered
//! monetary amounts, weakly label the amount-bearing sentences by exact
//! subset-sum selection, train a recurrent CRF tagger to recover the total
//! crime amount, pretrain a numeracy-preserving number encoder, and train a
//! hierarchical multi-task classifier with momentum-queue supervised
//! contrastive learning and amount fusion into the penalty-term head.

pub mod autodiff;
pub mod amounts;
pub mod contrast;
pub mod corpus;
pub mod nn;
pub mod numenc;
pub mod tagger;
