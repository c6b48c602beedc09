# Tests for dcap.
