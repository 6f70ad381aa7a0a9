//! Randomized generators shared by the test suites.
