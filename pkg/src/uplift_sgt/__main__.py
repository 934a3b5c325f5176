from uplift_sgt.cli import entry_point

entry_point()
