//! Python bindings; populated once the core API settles.
