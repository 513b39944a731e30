"""Vehicle re-identification retrieval engine with spatio-temporal fusion."""
