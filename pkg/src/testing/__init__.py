"""Reference oracles for the fast nonlocal paths"""
