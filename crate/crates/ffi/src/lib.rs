//! Placeholder; filled in once the core API is stable.
