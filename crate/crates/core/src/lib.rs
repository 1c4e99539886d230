pub mod acceptance;
pub mod freenc;
pub mod graphs;
pub mod kz;
pub mod qseries;
pub mod schottky;
