"""Product-form propagators and a Fock-space oracle for optomechanics."""
__version__ = "0.1.0"
