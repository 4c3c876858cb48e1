pub mod featurize;
pub mod inspect;
pub mod prepare;
pub mod score;
pub mod stream;
