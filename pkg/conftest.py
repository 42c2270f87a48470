# Keep collection to tests/.
collect_ignore = ["examples", "scripts"]
