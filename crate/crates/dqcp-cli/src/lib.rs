//! Library surface of the command-line front end: problem-document parsing
//! and printing, result documents, and the canonicalization dump.

pub mod doc;
pub mod dump;
pub mod result;
