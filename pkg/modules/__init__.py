# Reaction Network Ergodicity Toolkit Modules
