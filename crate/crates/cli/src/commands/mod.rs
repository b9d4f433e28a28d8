pub mod corpus;
pub mod fields;
pub mod labels;
pub mod topology;
