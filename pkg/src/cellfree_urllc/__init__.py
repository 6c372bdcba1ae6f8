"""Cell-free Massive MIMO URLLC availability via finite-blocklength bounds."""
