pub mod corpus;
pub mod dl;
pub mod fo;
pub mod gen;
pub mod memstruct;
pub mod prog;
pub mod sl;
pub mod syntax;
pub mod translate;
pub mod verify;
pub mod wp;
