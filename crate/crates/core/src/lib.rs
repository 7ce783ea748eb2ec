pub mod catalog;
pub mod cli;
pub mod classfile;
pub mod intake;
pub mod output;
pub mod rules;
pub mod slicer;
