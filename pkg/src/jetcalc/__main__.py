from jetcalc.cli import main

main()
