"""Tests for the Meshtastic Gopher Server."""
