//! Semantic composition and execution of legacy-wrapped SOAP services whose
//! results arrive as one composite message.
//!
//! The pipeline: [`ingest`] turns WSDL/XSD into annotation skeletons,
//! [`semodel`] holds the extended annotations and their triple store,
//! [`profile`] and [`composer`] run the ontology-backed consistency checks,
//! and [`executor`] drives a validated workflow against live or mock
//! endpoints ([`mockserv`]).

pub mod composer;
pub mod diag;
pub mod executor;
pub mod ingest;
pub mod iri;
pub mod mockserv;
pub mod ontology;
pub mod profile;
pub mod semodel;
