# Test package for Info Transition